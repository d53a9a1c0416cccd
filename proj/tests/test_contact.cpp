#include <catch2/catch.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "tresca/contact.hpp"
#include "tresca/driver.hpp"
#include "tresca/mesh.hpp"

using namespace tresca;

namespace {

std::map<Side, BoundaryTag> contact_tags() {
  return {{Side::Left, BoundaryTag::Dirichlet},
          {Side::Right, BoundaryTag::Contact},
          {Side::Bottom, BoundaryTag::Neumann},
          {Side::Top, BoundaryTag::Neumann}};
}

ContactProblem experiment_problem(const Mesh& mesh, const FeSpace& space,
                                  double g = -0.1, double kappa = 0.2,
                                  double alpha = 1e-3) {
  return make_contact_problem(
      mesh, space, make_material(1.0, 0.3),
      [](const Vec2&) { return Vec2::Zero(); },
      [g](const Vec2&) { return g; }, [kappa](const Vec2&) { return kappa; },
      alpha);
}

DiscreteSolution interpolate(const FeSpace& space,
                             const std::function<Vec2(const Vec2&)>& u) {
  DiscreteSolution sol = zero_solution(space);
  for (int n = 0; n < space.num_scalar_nodes(); ++n) {
    const Vec2 v = u(space.node_position(n));
    sol.coefficients[FeSpace::dof(n, 0)] = v.x();
    sol.coefficients[FeSpace::dof(n, 1)] = v.y();
  }
  return sol;
}

SpMat nitsche_matrix(const FeSpace& space, const NitscheIncrement& inc) {
  return matrix_from_triplets(space.total_dofs(), inc.matrix);
}

}  // namespace

TEST_CASE("gamma values at contact quadrature points") {
  const Mesh mesh = build_unit_square_mesh(4, contact_tags());
  const FeSpace space(mesh, 2);

  SECTION("zero displacement, zero gap") {
    const ContactProblem p = experiment_problem(mesh, space, 0.0);
    const DiscreteSolution u = zero_solution(space);
    CHECK(gamma_n(p, u, 0, 1) == Approx(0.0).margin(1e-14));
    CHECK(gamma_t(p, u, 0, 1) == Approx(0.0).margin(1e-14));
  }

  SECTION("negative gap produces the penalty-scaled value") {
    // alpha = 1e-3 and h_E = 0.25 give 0.1 / 2.5e-4 = 400.
    const ContactProblem p = experiment_problem(mesh, space, -0.1);
    const DiscreteSolution u = zero_solution(space);
    for (int q = 0; q < 3; ++q)
      CHECK(gamma_n(p, u, 2, q) == Approx(400.0).epsilon(1e-12));
  }

  SECTION("uniform normal displacement equal to the gap") {
    const ContactProblem p = experiment_problem(mesh, space, -0.1);
    const DiscreteSolution u =
        interpolate(space, [](const Vec2&) { return Vec2(-0.1, 0.0); });
    CHECK(gamma_n(p, u, 1, 0) == Approx(0.0).margin(1e-10));
  }

  SECTION("tangential displacement scales the same way") {
    // u_t = 1e-4 with sigma_t = 0: 1e-4 / 2.5e-4 = 0.4.
    const ContactProblem p = experiment_problem(mesh, space);
    const DiscreteSolution u =
        interpolate(space, [](const Vec2&) { return Vec2(0.0, 1e-4); });
    CHECK(gamma_t(p, u, 0, 2) == Approx(0.4).epsilon(1e-12));
  }
}

TEST_CASE("active set classification") {
  const Mesh mesh = build_unit_square_mesh(4, contact_tags());
  const FeSpace space(mesh, 2);
  const DiscreteSolution u = zero_solution(space);

  SECTION("negative gap puts everything in contact and stick") {
    const ContactProblem p = experiment_problem(mesh, space, -0.1, 0.2);
    const ActiveSet a = classify(p, u);
    for (std::size_t i = 0; i < a.in_contact.size(); ++i) {
      CHECK(a.in_contact[i]);
      CHECK(a.sticking[i]);
    }
  }

  SECTION("zero friction bound forbids sticking") {
    const ContactProblem p = experiment_problem(mesh, space, -0.1, 0.0);
    const ActiveSet a = classify(p, u);
    for (std::size_t i = 0; i < a.sticking.size(); ++i)
      CHECK_FALSE(a.sticking[i]);
  }

  SECTION("large positive gap leaves the contact set empty") {
    const ContactProblem p = experiment_problem(mesh, space, 10.0, 0.2);
    const ActiveSet a = classify(p, u);
    for (std::size_t i = 0; i < a.in_contact.size(); ++i)
      CHECK_FALSE(a.in_contact[i]);
  }
}

TEST_CASE("nitsche increment with empty active sets is negative semidefinite") {
  const Mesh mesh = build_unit_square_mesh(4, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space, 10.0, 0.0);
  const ActiveSet a = classify(p, zero_solution(space));
  const NitscheIncrement inc = assemble_nitsche(p, a);
  const SpMat m = nitsche_matrix(space, inc);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double scale = m.coeffs().abs().maxCoeff();
  for (int trial = 0; trial < 20; ++trial) {
    VecX x(space.total_dofs());
    for (int i = 0; i < x.size(); ++i) x[i] = uni(rng);
    CHECK(x.dot(m * x) <= 1e-12 * scale * x.squaredNorm());
  }
  CHECK(inc.rhs.norm() == Approx(0.0).margin(1e-15));  // no slip direction yet
}

TEST_CASE("fully active sets with zero gap produce no load") {
  const Mesh mesh = build_unit_square_mesh(4, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space, 0.0, 0.2);
  ActiveSet a = classify(p, zero_solution(space));
  for (std::size_t i = 0; i < a.in_contact.size(); ++i) {
    a.in_contact[i] = 1;
    a.sticking[i] = 1;
  }
  const NitscheIncrement inc = assemble_nitsche(p, a);
  CHECK(inc.rhs.norm() == Approx(0.0).margin(1e-15));
}

TEST_CASE("nitsche facet terms match an independent quadrature") {
  // Single P1 triangle with the hypotenuse as contact boundary.
  const std::vector<Vec2> verts{{0, 0}, {1, 0}, {0, 1}};
  const Mesh tri(verts, {{0, 1, 2}},
                 {{0, 1, BoundaryTag::Neumann},
                  {1, 2, BoundaryTag::Contact},
                  {2, 0, BoundaryTag::Neumann}});
  const FeSpace space(tri, 1);
  const double alpha = 1e-3, g = -0.1;
  const ContactProblem p = experiment_problem(tri, space, g, 0.2, alpha);

  ActiveSet a = classify(p, zero_solution(space));
  for (std::size_t i = 0; i < a.in_contact.size(); ++i) {
    a.in_contact[i] = 1;
    a.sticking[i] = 1;
  }
  const NitscheIncrement inc = assemble_nitsche(p, a);
  const SpMat m = nitsche_matrix(space, inc);

  // Independent evaluation: explicit P1 formulas, 3-point Gauss on the facet.
  const double h = std::sqrt(2.0);
  const Vec2 n = Vec2(1, 1).normalized();
  const Vec2 t = rot90(n);
  const double mu = p.material.lame_mu, lambda = p.material.lame_lambda;
  const std::array<Vec2, 3> grads{Vec2(-1, -1), Vec2(1, 0), Vec2(0, 1)};
  const std::array<double, 3> gauss{0.5 - 0.5 * std::sqrt(3.0 / 5.0), 0.5,
                                    0.5 + 0.5 * std::sqrt(3.0 / 5.0)};
  const std::array<double, 3> gw{5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0};

  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(6, 6);
  VecX expected_rhs = VecX::Zero(6);
  for (int q = 0; q < 3; ++q) {
    const double s = gauss[q];
    const Vec2 x = Vec2(1, 0) + s * (Vec2(0, 1) - Vec2(1, 0));
    std::array<double, 3> phi{1.0 - x.x() - x.y(), x.x(), x.y()};
    std::array<double, 6> vn{}, vt{}, sn{}, st{};
    for (int k = 0; k < 3; ++k)
      for (int c = 0; c < 2; ++c) {
        vn[2 * k + c] = phi[k] * n[c];
        vt[2 * k + c] = phi[k] * t[c];
        sn[2 * k + c] =
            2.0 * mu * n[c] * grads[k].dot(n) + lambda * grads[k][c];
        st[2 * k + c] = mu * (t[c] * grads[k].dot(n) + n[c] * grads[k].dot(t));
      }
    const double w = gw[q] * h;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j)
        expected(i, j) +=
            w * ((vn[i] * vn[j] + vt[i] * vt[j]) / (alpha * h) -
                 sn[i] * vn[j] - vn[i] * sn[j] - st[i] * vt[j] - vt[i] * st[j]);
      expected_rhs[i] += w * (g * vn[i] / (alpha * h) - g * sn[i]);
    }
  }

  for (int i = 0; i < 6; ++i) {
    CHECK(inc.rhs[i] == Approx(expected_rhs[i]).margin(1e-11));
    for (int j = 0; j < 6; ++j)
      CHECK(m.coeff(i, j) == Approx(expected(i, j)).margin(1e-9));
  }
}

TEST_CASE("nitsche increment is symmetric at every iteration state") {
  const Mesh mesh = build_unit_square_mesh(8, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space);
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> uni(-1e-3, 1e-3);
  DiscreteSolution w = zero_solution(space);
  for (int i = 0; i < space.total_dofs(); ++i) w.coefficients[i] = uni(rng);
  const ActiveSet a = classify(p, w);
  const SpMat m = nitsche_matrix(space, assemble_nitsche(p, a));
  const SpMat diff = SpMat(m - SpMat(m.transpose()));
  CHECK(diff.coeffs().abs().maxCoeff() <=
        1e-12 * m.coeffs().abs().maxCoeff());
}

TEST_CASE("contact iteration finds the zero fixed point immediately") {
  const Mesh mesh = build_unit_square_mesh(4, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space, 10.0, 0.0);
  const FixedPointResult r = solve_fixed_point(p);
  CHECK(r.iterations == 1);
  CHECK(r.solution.coefficients.norm() == Approx(0.0).margin(1e-12));
  CHECK(r.increments.size() == 1);
}

TEST_CASE("contact iteration is consistent with a strong imposition") {
  // The converged all-stick state must agree with strongly imposed
  // u = (g, 0) on the contact nodes up to the Nitsche consistency scale.
  const Mesh mesh = build_unit_square_mesh(8, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space);
  const FixedPointResult r = solve_fixed_point(p);

  std::vector<char> cons = space.dirichlet_dof_flags();
  VecX vals = VecX::Zero(space.total_dofs());
  for (const auto& f : mesh.boundary_facets()) {
    if (f.tag != BoundaryTag::Contact) continue;
    for (int nd : {f.a, f.b, space.edge_node(f.a, f.b)}) {
      cons[FeSpace::dof(nd, 0)] = 1;
      vals[FeSpace::dof(nd, 0)] = -0.1;
      cons[FeSpace::dof(nd, 1)] = 1;
    }
  }
  const auto k0 = stiffness_triplets(space, p.material);
  VecX rhs = VecX::Zero(space.total_dofs());
  const SpMat a = assemble_constrained(space.total_dofs(), k0, rhs, cons, vals);
  const VecX strong = solve_spd(a, rhs);
  DiscreteSolution diff{&space, r.solution.coefficients - strong};
  CHECK(h1_norm(diff) <= 1e-3 * h1_norm(r.solution));
  CHECK(h1_norm(r.solution) ==
        Approx(h1_norm(DiscreteSolution{&space, strong})).epsilon(1e-5));
}

TEST_CASE("final active set reproduces itself") {
  const Mesh mesh = build_unit_square_mesh(8, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space);
  const SolverConfig config;
  const FixedPointResult r = solve_fixed_point(p, config);
  for (int dof : space.dirichlet_dofs())
    CHECK(r.solution.coefficients[dof] == 0.0);
  const ActiveSet again = classify(p, r.solution, config);
  REQUIRE(again.in_contact.size() == r.final_active.in_contact.size());
  for (std::size_t i = 0; i < again.in_contact.size(); ++i) {
    CHECK(again.in_contact[i] == r.final_active.in_contact[i]);
    CHECK(again.sticking[i] == r.final_active.sticking[i]);
  }
}

TEST_CASE("halving the stabilization parameter barely moves the solution") {
  const Mesh mesh = build_unit_square_mesh(16, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p1 = experiment_problem(mesh, space, -0.1, 0.2, 1e-3);
  const ContactProblem p2 = experiment_problem(mesh, space, -0.1, 0.2, 5e-4);
  const double n1 = h1_norm(solve_fixed_point(p1).solution);
  const double n2 = h1_norm(solve_fixed_point(p2).solution);
  CHECK(std::abs(n1 - n2) / n1 < 1e-3);
}

TEST_CASE("a destabilizing alpha raises a singular system error") {
  const Mesh mesh = build_unit_square_mesh(8, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space, -0.1, 0.2, 1e3);
  CHECK_THROWS_AS(solve_fixed_point(p), singular_system_error);
}

TEST_CASE("exhausting the iteration budget reports the history") {
  const Mesh mesh = build_unit_square_mesh(4, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space);
  SolverConfig config;
  config.max_iterations = 1;
  try {
    solve_fixed_point(p, config);
    FAIL("expected nonconvergence_error");
  } catch (const nonconvergence_error& e) {
    CHECK(e.history.size() == 1);
    CHECK(e.history[0] > config.tolerance);
  }
}

TEST_CASE("per-point and facet-mean modes agree on the experiment") {
  const Mesh mesh = build_unit_square_mesh(32, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space);
  SolverConfig point, facet;
  facet.active_set_mode = ActiveSetMode::PerFacetMean;
  const double np = h1_norm(solve_fixed_point(p, point).solution);
  const double nf = h1_norm(solve_fixed_point(p, facet).solution);
  CHECK(std::abs(np - nf) / np < 1e-3);
}

TEST_CASE("recovered multipliers honor their bounds") {
  const Mesh mesh = build_unit_square_mesh(8, contact_tags());
  const FeSpace space(mesh, 2);

  SECTION("no contact means zero pressure") {
    const ContactProblem p = experiment_problem(mesh, space, 10.0, 0.2);
    const MultiplierField f = recover_multipliers(p, zero_solution(space));
    for (const auto& facet : f.facets)
      for (double ln : facet.lambda_n) CHECK(ln == 0.0);
  }

  SECTION("large tangential displacement saturates at the bound") {
    const ContactProblem p = experiment_problem(mesh, space);
    const DiscreteSolution u =
        interpolate(space, [](const Vec2&) { return Vec2(0.0, 0.01); });
    const MultiplierField f = recover_multipliers(p, u);
    for (const auto& facet : f.facets)
      for (double lt : facet.lambda_t) CHECK(std::abs(lt) == Approx(0.2));
  }

  SECTION("clamp invariants hold at the converged experiment state") {
    const ContactProblem p = experiment_problem(mesh, space);
    const FixedPointResult r = solve_fixed_point(p);
    const MultiplierField f = recover_multipliers(p, r.solution);
    for (std::size_t fp = 0; fp < f.facets.size(); ++fp)
      for (std::size_t q = 0; q < f.facets[fp].lambda_n.size(); ++q) {
        // The pressed body stays in contact on the whole boundary.
        CHECK(f.facets[fp].lambda_n[q] > 0.0);
        CHECK(std::abs(f.facets[fp].lambda_t[q]) <=
              p.facets[fp].kappa_q[q] + 1e-12);
      }
  }
}

TEST_CASE("regression pins on the built-in experiment") {
  // Frozen outputs of this solver on the default 4x4 configuration; guards
  // refactorings against silent numerical drift.
  const Mesh mesh = build_unit_square_mesh(4, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space);
  const FixedPointResult r = solve_fixed_point(p);
  CHECK(r.iterations == 2);
  CHECK(h1_norm(r.solution) == Approx(0.1257107751423726).epsilon(1e-10));
  const MultiplierField field = recover_multipliers(p, r.solution);
  const IndicatorSet ind = total(p, r.solution, field);
  CHECK(ind.eta_total() == Approx(0.05519109065562635).epsilon(1e-10));
  CHECK(ind.S_total() == Approx(0.0009381367461500118).epsilon(1e-8));
}

TEST_CASE("multiplier trace is sorted by height") {
  const Mesh mesh = build_unit_square_mesh(4, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space);
  const FixedPointResult r = solve_fixed_point(p);
  const MultiplierField f = recover_multipliers(p, r.solution);
  std::ostringstream os;
  write_multiplier_trace(os, p, f);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "y,lambda_n,lambda_t");
  double prev = -1e30;
  int rows = 0;
  while (std::getline(is, line)) {
    const double y = std::stod(line.substr(0, line.find(',')));
    CHECK(y >= prev);
    prev = y;
    ++rows;
  }
  CHECK(rows == 12);  // 4 facets times 3 quadrature points
}
