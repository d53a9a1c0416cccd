#include <catch2/catch.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "tresca/contact.hpp"
#include "tresca/estimator.hpp"
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
                                  std::function<Vec2(const Vec2&)> f =
                                      [](const Vec2&) { return Vec2::Zero(); },
                                  double g = -0.1, double kappa = 0.2) {
  return make_contact_problem(
      mesh, space, make_material(1.0, 0.3), std::move(f),
      [g](const Vec2&) { return g; }, [kappa](const Vec2&) { return kappa; },
      1e-3);
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

Mesh single_triangle() {
  return Mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}},
              {{0, 1, BoundaryTag::Neumann},
               {1, 2, BoundaryTag::Neumann},
               {2, 0, BoundaryTag::Neumann}});
}

}  // namespace

TEST_CASE("element residual vanishes where the strong equation holds") {
  const Mesh mesh = build_unit_square_mesh(2, contact_tags());

  SECTION("order 1 with zero body force") {
    const FeSpace space(mesh, 1);
    const ContactProblem p = experiment_problem(mesh, space);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    DiscreteSolution u = zero_solution(space);
    for (int i = 0; i < space.total_dofs(); ++i) u.coefficients[i] = uni(rng);
    for (int t = 0; t < mesh.num_triangles(); ++t)
      CHECK(element_residual(p, u, t) == Approx(0.0).margin(1e-13));
  }

  SECTION("order 2 with an affine exact field") {
    const FeSpace space(mesh, 2);
    const ContactProblem p = experiment_problem(mesh, space);
    const DiscreteSolution u = interpolate(space, [](const Vec2& x) {
      return Vec2(0.1 * x.x() - 0.3 * x.y(), 0.2 * x.y());
    });
    for (int t = 0; t < mesh.num_triangles(); ++t)
      CHECK(element_residual(p, u, t) == Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("element residual of a quadratic field matches the hand value") {
  const Mesh tri = single_triangle();
  const FeSpace space(tri, 2);
  const ContactProblem p = experiment_problem(tri, space);
  const DiscreteSolution u = interpolate(
      space, [](const Vec2& x) { return Vec2(x.x() * x.x(), 0.0); });
  // div sigma = (2(2 mu + lambda), 0), constant; area 1/2, diameter sqrt(2).
  const double divs = 2.0 * (2.0 * p.material.lame_mu + p.material.lame_lambda);
  const double expected = std::sqrt(2.0) * divs * std::sqrt(0.5);
  CHECK(element_residual(p, u, 0) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("edge jump of stress across interior edges") {
  const Mesh mesh = build_unit_square_mesh(1, contact_tags());
  const FeSpace space(mesh, 1);
  const ContactProblem p = experiment_problem(mesh, space);
  const auto edges = interior_edges(mesh);
  REQUIRE(edges.size() == 1);

  SECTION("globally affine fields have continuous stress") {
    const DiscreteSolution u = interpolate(space, [](const Vec2& x) {
      return Vec2(0.4 * x.x() + 0.1 * x.y(), -0.2 * x.x());
    });
    CHECK(edge_jump(p, u, edges[0]) == Approx(0.0).margin(1e-13));
  }

  SECTION("hat function jump matches per-triangle constant stresses") {
    // Nodal hat on one diagonal endpoint; P1 stresses are constant per
    // triangle, so the jump integral is |(sigma_L - sigma_R) n|^2 h_E^2.
    DiscreteSolution u = zero_solution(space);
    u.coefficients[FeSpace::dof(0, 0)] = 1.0;  // x-hat at corner vertex 0

    auto p1_stress = [&](int t) {
      Mat2 grad = Mat2::Zero();
      const TriangleMap map = triangle_map(mesh, t);
      const BasisEval basis = eval_basis(1, map, Vec2(1.0 / 3, 1.0 / 3));
      const auto& nodes = space.triangle_nodes(t);
      for (int k = 0; k < 3; ++k)
        for (int c = 0; c < 2; ++c)
          grad.row(c) += u.coefficients[FeSpace::dof(nodes[k], c)] *
                         basis.grad[k].transpose();
      return stress(p.material, symmetric_part(grad));
    };
    const Vec2 jump =
        (p1_stress(edges[0].left) - p1_stress(edges[0].right)) * edges[0].normal;
    const double h = (mesh.vertex(edges[0].b) - mesh.vertex(edges[0].a)).norm();
    const double expected = std::sqrt(h * jump.squaredNorm() * h);
    CHECK(edge_jump(p, u, edges[0]) == Approx(expected).epsilon(1e-12));
  }

  SECTION("orientation swap leaves the jump invariant") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    DiscreteSolution u = zero_solution(space);
    for (int i = 0; i < space.total_dofs(); ++i) u.coefficients[i] = uni(rng);
    InteriorEdge flipped = edges[0];
    std::swap(flipped.a, flipped.b);
    std::swap(flipped.left, flipped.right);
    flipped.normal = -edges[0].normal;
    CHECK(edge_jump(p, u, edges[0]) ==
          Approx(edge_jump(p, u, flipped)).epsilon(1e-12));
  }
}

TEST_CASE("neumann residual") {
  const Mesh mesh = build_unit_square_mesh(1, contact_tags());
  const FeSpace space(mesh, 1);
  const ContactProblem p = experiment_problem(mesh, space);
  int bottom = -1;
  const auto& bf = mesh.boundary_facets();
  for (int f = 0; f < static_cast<int>(bf.size()); ++f)
    if (bf[f].tag == BoundaryTag::Neumann &&
        mesh.vertex(bf[f].a).y() < -0.49 && mesh.vertex(bf[f].b).y() < -0.49)
      bottom = f;
  REQUIRE(bottom >= 0);

  SECTION("zero stress field gives zero") {
    const DiscreteSolution u =
        interpolate(space, [](const Vec2&) { return Vec2(0.3, -0.4); });
    CHECK(neumann_residual(p, u, bottom) == Approx(0.0).margin(1e-13));
  }

  SECTION("uniaxial stretch against the hand value") {
    // sigma n = (0, -lambda) on the bottom edge; length 1.
    const DiscreteSolution u =
        interpolate(space, [](const Vec2& x) { return Vec2(x.x(), 0.0); });
    CHECK(neumann_residual(p, u, bottom) ==
          Approx(p.material.lame_lambda).epsilon(1e-12));
  }

  SECTION("facet subdivision halves the squared indicator for constant data") {
    const DiscreteSolution u =
        interpolate(space, [](const Vec2& x) { return Vec2(x.x(), 0.0); });
    const double parent2 = std::pow(neumann_residual(p, u, bottom), 2);

    const Mesh fine = refine_all(mesh);
    const FeSpace fspace(fine, 1);
    const ContactProblem fp = experiment_problem(fine, fspace);
    const DiscreteSolution fu =
        interpolate(fspace, [](const Vec2& x) { return Vec2(x.x(), 0.0); });
    double children2 = 0.0;
    const auto& fbf = fine.boundary_facets();
    for (int f = 0; f < static_cast<int>(fbf.size()); ++f)
      if (fbf[f].tag == BoundaryTag::Neumann &&
          fine.vertex(fbf[f].a).y() < -0.49 && fine.vertex(fbf[f].b).y() < -0.49)
        children2 += std::pow(neumann_residual(fp, fu, f), 2);
    CHECK(children2 == Approx(0.5 * parent2).epsilon(1e-12));
  }
}

TEST_CASE("contact residual") {
  const Mesh mesh = build_unit_square_mesh(4, contact_tags());
  const FeSpace space(mesh, 2);

  SECTION("an exact multiplier cancels the traction") {
    const ContactProblem p = experiment_problem(mesh, space);
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> uni(-0.1, 0.1);
    DiscreteSolution u = zero_solution(space);
    for (int i = 0; i < space.total_dofs(); ++i) u.coefficients[i] = uni(rng);
    MultiplierField field;
    for (std::size_t f = 0; f < p.facets.size(); ++f) {
      MultiplierField::Facet mf;
      mf.facet_id = p.facets[f].facet_id;
      for (std::size_t q = 0; q < p.facets[f].qp.size(); ++q) {
        const auto st = detail::boundary_state(p, u, p.facets[f], q);
        mf.lambda_n.push_back(-st.sigma_n);
        mf.lambda_t.push_back(-st.sigma_t);
      }
      field.facets.push_back(mf);
    }
    for (std::size_t f = 0; f < p.facets.size(); ++f)
      CHECK(contact_residual(p, u, field, static_cast<int>(f)) ==
            Approx(0.0).margin(1e-13));
  }

  SECTION("zero solution with zero gap gives zero") {
    const ContactProblem p = experiment_problem(
        mesh, space, [](const Vec2&) { return Vec2::Zero(); }, 0.0);
    const DiscreteSolution u = zero_solution(space);
    const MultiplierField field = recover_multipliers(p, u);
    for (std::size_t f = 0; f < p.facets.size(); ++f)
      CHECK(contact_residual(p, u, field, static_cast<int>(f)) ==
            Approx(0.0).margin(1e-13));
  }

  SECTION("unclamped points reduce to the weighted gap error") {
    const ContactProblem p = experiment_problem(mesh, space);
    const FixedPointResult r = solve_fixed_point(p);
    const MultiplierField field = recover_multipliers(p, r.solution);
    const ActiveSet a = classify(p, r.solution);
    for (std::size_t f = 0; f < p.facets.size(); ++f) {
      const double ah = 1e-3 * p.facets[f].h;
      for (std::size_t q = 0; q < p.facets[f].qp.size(); ++q) {
        const int i = a.index(p, static_cast<int>(f), static_cast<int>(q));
        if (!a.in_contact[i] || !a.sticking[i]) continue;
        const auto st = detail::boundary_state(p, r.solution, p.facets[f], q);
        const double normal_residual =
            field.facets[f].lambda_n[q] + st.sigma_n;
        CHECK(normal_residual ==
              Approx((st.u_n - p.facets[f].gap_q[q]) / ah).margin(1e-9));
      }
    }
  }
}

TEST_CASE("contact consistency terms") {
  const Mesh mesh = build_unit_square_mesh(1, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space);

  SECTION("exact complementarity gives zero") {
    const DiscreteSolution u =
        interpolate(space, [](const Vec2&) { return Vec2(-0.1, 0.0); });
    const MultiplierField field = recover_multipliers(p, u);
    const ConsistencyTerms s = contact_consistency(p, u, field);
    CHECK(s.total == Approx(0.0).margin(1e-12));
  }

  SECTION("friction integrand is pointwise nonnegative under the bound") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> ut(-1.0, 1.0);
    std::uniform_real_distribution<double> lt(-0.2, 0.2);
    for (int trial = 0; trial < 200; ++trial) {
      const double u_t = ut(rng), lambda_t = lt(rng);
      CHECK(0.2 * std::abs(u_t) - u_t * lambda_t >= -1e-15);
    }
  }

  SECTION("uniform penetration splits into the stated terms") {
    // u_n - g = +0.01 on a contact boundary of length 1.
    const DiscreteSolution u =
        interpolate(space, [](const Vec2&) { return Vec2(-0.09, 0.0); });
    MultiplierField field;
    MultiplierField::Facet mf;
    mf.facet_id = p.facets[0].facet_id;
    mf.lambda_n = {0.7, 0.7, 0.7};
    mf.lambda_t = {0.0, 0.0, 0.0};
    field.facets.push_back(mf);
    const ConsistencyTerms s = contact_consistency(p, u, field);
    CHECK(s.components[0] == Approx(1e-4).epsilon(1e-12));
    CHECK(s.components[1] == Approx(0.0).margin(1e-15));
    CHECK(s.components[2] == Approx(0.0).margin(1e-15));
  }

  SECTION("a multiplier violating its bound is reported") {
    const DiscreteSolution u =
        interpolate(space, [](const Vec2&) { return Vec2(-0.1, 0.05); });
    MultiplierField field;
    MultiplierField::Facet mf;
    mf.facet_id = p.facets[0].facet_id;
    mf.lambda_n = {0.0, 0.0, 0.0};
    mf.lambda_t = {5.0, 5.0, 5.0};  // far beyond kappa
    field.facets.push_back(mf);
    CHECK_THROWS_AS(contact_consistency(p, u, field), std::runtime_error);
  }
}

TEST_CASE("oscillation of the body force") {
  const Mesh tri = single_triangle();

  SECTION("zero and element-polynomial forces have no oscillation") {
    const FeSpace space(tri, 1);
    const ContactProblem zero = experiment_problem(tri, space);
    CHECK(oscillation(zero, 0) == Approx(0.0).margin(1e-14));

    const ContactProblem affine = experiment_problem(
        tri, space,
        [](const Vec2& x) { return Vec2(1.0 + 2.0 * x.x() - x.y(), 0.5); });
    CHECK(oscillation(affine, 0) == Approx(0.0).margin(1e-13));
  }

  SECTION("cubic force against an independent projection") {
    const FeSpace space(tri, 1);
    const ContactProblem p = experiment_problem(
        tri, space, [](const Vec2& x) { return Vec2(std::pow(x.x(), 3), 0.0); });

    // Independent least-squares projection onto P1 with monomials {1, x, y}
    // and the same quadrature rule.
    const QuadratureRule rule = interior_quadrature(4);
    Eigen::Matrix3d mass = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2 x = rule.points[q];
      const Eigen::Vector3d b(1.0, x.x(), x.y());
      mass += rule.weights[q] * b * b.transpose();
      rhs += rule.weights[q] * std::pow(x.x(), 3) * b;
    }
    const Eigen::Vector3d c = mass.fullPivLu().solve(rhs);
    double res2 = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2 x = rule.points[q];
      const double r = std::pow(x.x(), 3) - (c[0] + c[1] * x.x() + c[2] * x.y());
      res2 += rule.weights[q] * r * r;
    }
    const double expected = std::sqrt(2.0) * std::sqrt(res2);
    CHECK(oscillation(p, 0) == Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("indicator totals") {
  SECTION("components add up") {
    const Mesh mesh = build_unit_square_mesh(4, contact_tags());
    const FeSpace space(mesh, 2);
    const ContactProblem p = experiment_problem(mesh, space);
    const FixedPointResult r = solve_fixed_point(p);
    const MultiplierField field = recover_multipliers(p, r.solution);
    const IndicatorSet ind = total(p, r.solution, field);

    double sum = 0.0;
    for (double v : ind.eta_K2) sum += v;
    for (double v : ind.eta_int2) sum += v;
    for (double v : ind.eta_neu2) sum += v;
    for (double v : ind.eta_con2) sum += v;
    CHECK(ind.eta_total2 == Approx(sum).epsilon(1e-14));
    CHECK(ind.eta_total() > 0.0);
    CHECK(ind.S_total() >= 0.0);

    double attributed = 0.0;
    for (double v : ind.element_attribution()) attributed += v;
    CHECK(attributed == Approx(ind.eta_total2).epsilon(1e-12));
  }

  SECTION("an exact affine pure-Dirichlet solution has zero indicator") {
    std::map<Side, BoundaryTag> all_dirichlet{
        {Side::Left, BoundaryTag::Dirichlet},
        {Side::Right, BoundaryTag::Dirichlet},
        {Side::Bottom, BoundaryTag::Dirichlet},
        {Side::Top, BoundaryTag::Dirichlet}};
    const Mesh mesh = build_unit_square_mesh(3, all_dirichlet);
    const FeSpace space(mesh, 2);
    const ContactProblem p = experiment_problem(mesh, space);
    const DiscreteSolution u = interpolate(space, [](const Vec2& x) {
      return Vec2(0.02 + 0.1 * x.x() + 0.3 * x.y(), -0.05 + 0.2 * x.x());
    });
    const MultiplierField field = recover_multipliers(p, u);
    const IndicatorSet ind = total(p, u, field);
    CHECK(ind.eta_total() <= 1e-10);
  }
}

TEST_CASE("consistency term stays bounded under uniform refinement") {
  std::vector<double> s_values;
  for (int n : {4, 8, 16}) {
    const Mesh mesh = build_unit_square_mesh(n, contact_tags());
    const FeSpace space(mesh, 2);
    const ContactProblem p = experiment_problem(mesh, space);
    const FixedPointResult r = solve_fixed_point(p);
    const MultiplierField field = recover_multipliers(p, r.solution);
    const IndicatorSet ind = total(p, r.solution, field);
    s_values.push_back(ind.S_total());
  }
  for (std::size_t i = 1; i < s_values.size(); ++i)
    CHECK(s_values[i] <= s_values[0] * 1.5);
}

TEST_CASE("indicator dump format") {
  const Mesh mesh = build_unit_square_mesh(2, contact_tags());
  const FeSpace space(mesh, 2);
  const ContactProblem p = experiment_problem(mesh, space);
  const FixedPointResult r = solve_fixed_point(p);
  const MultiplierField field = recover_multipliers(p, r.solution);
  const IndicatorSet ind = total(p, r.solution, field);
  std::ostringstream os;
  write_indicator_dump(os, ind);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "kind,id,value2");
  int kinds[4] = {0, 0, 0, 0};
  while (std::getline(is, line)) {
    if (line.rfind("K,", 0) == 0) ++kinds[0];
    if (line.rfind("E_int,", 0) == 0) ++kinds[1];
    if (line.rfind("E_neu,", 0) == 0) ++kinds[2];
    if (line.rfind("E_con,", 0) == 0) ++kinds[3];
  }
  CHECK(kinds[0] == mesh.num_triangles());
  CHECK(kinds[1] == static_cast<int>(interior_edges(mesh).size()));
  CHECK(kinds[2] == 4);
  CHECK(kinds[3] == 2);
}
