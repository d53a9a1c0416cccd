#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tresca/elasticity.hpp"
#include "tresca/errors.hpp"
#include "tresca/mesh.hpp"
#include "tresca/space.hpp"

namespace tresca {

enum class ActiveSetMode { PerQuadraturePoint, PerFacetMean };

struct SolverConfig {
  double tolerance = 1e-8;  // energy norm of the iterate increment
  int max_iterations = 100;
  ActiveSetMode active_set_mode = ActiveSetMode::PerQuadraturePoint;
};

struct ContactQuadPoint {
  Vec2 x;          // physical coordinates
  double s = 0.0;  // facet parameter in [0,1]
  double weight = 0.0;  // ds weight, includes the facet length
  BasisEval basis;      // owner-triangle basis at this point
};

struct ContactFacet {
  int facet_id = -1;  // index into mesh.boundary_facets()
  int tri = -1;       // owner triangle
  double h = 0.0;     // facet length
  std::vector<ContactQuadPoint> qp;
  std::array<double, 3> gap_poly{};  // projection of the gap onto {1,s,s^2}
  std::vector<double> gap_q;         // projected gap at quadrature points
  std::vector<double> kappa_q;       // friction bound at quadrature points
};

// Tresca contact problem over a fixed mesh and space. The contact boundary
// trace data is precomputed once and shared by the solver and the estimator.
struct ContactProblem {
  const Mesh* mesh = nullptr;
  const FeSpace* space = nullptr;
  MaterialModel material;
  std::function<Vec2(const Vec2&)> body_force;
  std::function<double(const Vec2&)> gap;
  std::function<double(const Vec2&)> friction_bound;
  double alpha = 1e-3;
  Vec2 normal = Vec2::Zero();   // constant on the straight contact boundary
  Vec2 tangent = Vec2::Zero();  // normal rotated by +90 degrees
  std::vector<ContactFacet> facets;
  int points_per_facet = 0;
};

inline ContactProblem make_contact_problem(
    const Mesh& mesh, const FeSpace& space, const MaterialModel& material,
    std::function<Vec2(const Vec2&)> body_force,
    std::function<double(const Vec2&)> gap,
    std::function<double(const Vec2&)> friction_bound, double alpha) {
  if (!(alpha > 0.0))
    throw std::invalid_argument("make_contact_problem: alpha must be positive");
  ContactProblem p;
  p.mesh = &mesh;
  p.space = &space;
  p.material = material;
  p.body_force = std::move(body_force);
  p.gap = std::move(gap);
  p.friction_bound = std::move(friction_bound);
  p.alpha = alpha;

  const SegmentRule rule = facet_quadrature(4);
  p.points_per_facet = static_cast<int>(rule.points.size());
  const auto owners = facet_owners(mesh);
  const auto& bf = mesh.boundary_facets();
  TraceSpace trace(mesh);
  for (int f = 0; f < static_cast<int>(bf.size()); ++f) {
    if (bf[f].tag != BoundaryTag::Contact) continue;
    ContactFacet cf;
    cf.facet_id = f;
    cf.tri = owners[f];
    const Vec2 pa = mesh.vertex(bf[f].a), pb = mesh.vertex(bf[f].b);
    cf.h = (pb - pa).norm();

    const auto& tri = mesh.triangle(cf.tri);
    int opposite = -1;
    for (int k = 0; k < 3; ++k)
      if (tri[k] != bf[f].a && tri[k] != bf[f].b) opposite = tri[k];
    Vec2 n(pb.y() - pa.y(), pa.x() - pb.x());
    n.normalize();
    if (n.dot(mesh.vertex(opposite) - pa) > 0.0) n = -n;
    if (p.facets.empty()) {
      p.normal = n;
      p.tangent = rot90(n);
    } else if (n.dot(p.normal) < 0.999999) {
      throw std::invalid_argument(
          "make_contact_problem: contact facets face different directions");
    }

    cf.gap_poly = trace.project(f, p.gap);
    const TriangleMap map = triangle_map(mesh, cf.tri);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      ContactQuadPoint cq;
      cq.s = rule.points[q];
      cq.x = pa + cq.s * (pb - pa);
      cq.weight = rule.weights[q] * cf.h;
      cq.basis = eval_basis(space.order(), map, map_to_reference(map, cq.x));
      cf.qp.push_back(cq);
      cf.gap_q.push_back(eval_facet_poly(cf.gap_poly, cq.s));
      cf.kappa_q.push_back(p.friction_bound(cq.x));
      if (!(cf.kappa_q.back() >= 0.0))
        throw std::invalid_argument(
            "make_contact_problem: friction bound must be nonnegative");
    }
    p.facets.push_back(std::move(cf));
  }
  return p;
}

namespace detail {

struct BoundaryState {
  double u_n, u_t;          // normal/tangential displacement
  double sigma_n, sigma_t;  // normal/tangential traction components
};

inline BoundaryState boundary_state(const ContactProblem& p,
                                    const DiscreteSolution& u,
                                    const ContactFacet& facet, int q) {
  const BasisEval& basis = facet.qp[q].basis;
  const Vec2 val = displacement_value(u, facet.tri, basis);
  const Mat2 eps = symmetric_part(displacement_gradient(u, facet.tri, basis));
  const Vec2 traction = stress(p.material, eps) * p.normal;
  return {val.dot(p.normal), val.dot(p.tangent), traction.dot(p.normal),
          traction.dot(p.tangent)};
}

}  // namespace detail

// gamma_n(u) = (u_n - pi_h g)/(alpha h_E) - sigma_n(u) at a quadrature point.
inline double gamma_n(const ContactProblem& p, const DiscreteSolution& u,
                      int facet_pos, int q) {
  const ContactFacet& f = p.facets[facet_pos];
  const auto st = detail::boundary_state(p, u, f, q);
  return (st.u_n - f.gap_q[q]) / (p.alpha * f.h) - st.sigma_n;
}

// gamma_t(u) = u_t/(alpha h_E) - sigma_t(u), a signed scalar in 2D.
inline double gamma_t(const ContactProblem& p, const DiscreteSolution& u,
                      int facet_pos, int q) {
  const ContactFacet& f = p.facets[facet_pos];
  const auto st = detail::boundary_state(p, u, f, q);
  return st.u_t / (p.alpha * f.h) - st.sigma_t;
}

// Per-quadrature-point contact and stick membership derived from a
// displacement field, with the slip direction frozen from that field.
struct ActiveSet {
  std::vector<char> in_contact;   // gamma_n > 0
  std::vector<char> sticking;     // |gamma_t| < kappa
  std::vector<double> gamma_n;
  std::vector<double> gamma_t;
  std::vector<double> slip_sign;  // sign(gamma_t), 0 when gamma_t == 0

  int index(const ContactProblem& p, int facet_pos, int q) const {
    return facet_pos * p.points_per_facet + q;
  }
};

inline ActiveSet classify(const ContactProblem& p, const DiscreteSolution& u,
                          const SolverConfig& config = {}) {
  ActiveSet a;
  const int nf = static_cast<int>(p.facets.size());
  const int nq = p.points_per_facet;
  a.in_contact.resize(nf * nq);
  a.sticking.resize(nf * nq);
  a.gamma_n.resize(nf * nq);
  a.gamma_t.resize(nf * nq);
  a.slip_sign.resize(nf * nq);

  for (int f = 0; f < nf; ++f) {
    const ContactFacet& facet = p.facets[f];
    for (int q = 0; q < nq; ++q) {
      a.gamma_n[f * nq + q] = gamma_n(p, u, f, q);
      a.gamma_t[f * nq + q] = gamma_t(p, u, f, q);
    }
    if (config.active_set_mode == ActiveSetMode::PerQuadraturePoint) {
      for (int q = 0; q < nq; ++q) {
        const int i = f * nq + q;
        a.in_contact[i] = a.gamma_n[i] > 0.0;
        a.sticking[i] = std::abs(a.gamma_t[i]) < facet.kappa_q[q];
        a.slip_sign[i] = a.gamma_t[i] > 0.0 ? 1.0
                         : a.gamma_t[i] < 0.0 ? -1.0
                                              : 0.0;
      }
    } else {
      // One decision per facet from quadrature-weighted mean values.
      double wsum = 0.0, gn = 0.0, gt = 0.0, kap = 0.0;
      for (int q = 0; q < nq; ++q) {
        const double w = facet.qp[q].weight;
        wsum += w;
        gn += w * a.gamma_n[f * nq + q];
        gt += w * a.gamma_t[f * nq + q];
        kap += w * facet.kappa_q[q];
      }
      gn /= wsum;
      gt /= wsum;
      kap /= wsum;
      const char contact = gn > 0.0;
      const char stick = std::abs(gt) < kap;
      const double sign = gt > 0.0 ? 1.0 : gt < 0.0 ? -1.0 : 0.0;
      for (int q = 0; q < nq; ++q) {
        const int i = f * nq + q;
        a.in_contact[i] = contact;
        a.sticking[i] = stick;
        a.slip_sign[i] = sign;
      }
    }
  }
  return a;
}

struct NitscheIncrement {
  std::vector<Triplet> matrix;
  VecX rhs;
};

// Boundary terms of the contact iteration for fixed active sets. Per
// quadrature point, with H = h_E and surface measure w:
//   on Gamma_C:        (1/(alpha H)) u_n v_n - sigma_n(u) v_n - u_n sigma_n(v)
//   off Gamma_C:       -alpha H sigma_n(u) sigma_n(v)
//   on Gamma_S:        (1/(alpha H)) u_t v_t - sigma_t(u) v_t - u_t sigma_t(v)
//   off Gamma_S:       -alpha H sigma_t(u) sigma_t(v)
//   rhs on Gamma_C:    (1/(alpha H)) (pi_h g) v_n - (pi_h g) sigma_n(v)
//   rhs off Gamma_S:   -kappa sign(gamma_t(w)) (v_t - alpha H sigma_t(v))
inline NitscheIncrement assemble_nitsche(const ContactProblem& p,
                                         const ActiveSet& active) {
  NitscheIncrement inc;
  inc.rhs = VecX::Zero(p.space->total_dofs());
  const int nl = p.space->nodes_per_triangle();
  const int ndof = 2 * nl;
  const double mu = p.material.lame_mu, lambda = p.material.lame_lambda;
  const Vec2 n = p.normal, t = p.tangent;

  Eigen::Matrix<double, 12, 12> local;
  Eigen::Matrix<double, 12, 1> local_rhs;
  std::array<double, 12> vn{}, vt{}, sn{}, st{};

  for (std::size_t fpos = 0; fpos < p.facets.size(); ++fpos) {
    const ContactFacet& facet = p.facets[fpos];
    const auto& nodes = p.space->triangle_nodes(facet.tri);
    const double ah = p.alpha * facet.h;
    local.setZero();
    local_rhs.setZero();

    for (std::size_t q = 0; q < facet.qp.size(); ++q) {
      const ContactQuadPoint& cq = facet.qp[q];
      const double w = cq.weight;
      for (int k = 0; k < nl; ++k) {
        const double phi = cq.basis.value[k];
        const Vec2& g = cq.basis.grad[k];
        const double gn = g.dot(n), gt = g.dot(t);
        for (int c = 0; c < 2; ++c) {
          vn[2 * k + c] = phi * n[c];
          vt[2 * k + c] = phi * t[c];
          sn[2 * k + c] = 2.0 * mu * n[c] * gn + lambda * g[c];
          st[2 * k + c] = mu * (t[c] * gn + n[c] * gt);
        }
      }

      const int i = active.index(p, static_cast<int>(fpos), static_cast<int>(q));
      const bool contact = active.in_contact[i];
      const bool stick = active.sticking[i];

      for (int a = 0; a < ndof; ++a)
        for (int b = 0; b < ndof; ++b) {
          double v = 0.0;
          if (contact)
            v += vn[a] * vn[b] / ah - sn[a] * vn[b] - vn[a] * sn[b];
          else
            v += -ah * sn[a] * sn[b];
          if (stick)
            v += vt[a] * vt[b] / ah - st[a] * vt[b] - vt[a] * st[b];
          else
            v += -ah * st[a] * st[b];
          local(a, b) += w * v;
        }

      if (contact) {
        const double g = facet.gap_q[q];
        for (int a = 0; a < ndof; ++a)
          local_rhs[a] += w * (g * vn[a] / ah - g * sn[a]);
      }
      if (!stick) {
        const double load = -facet.kappa_q[q] * active.slip_sign[i];
        for (int a = 0; a < ndof; ++a)
          local_rhs[a] += w * load * (vt[a] - ah * st[a]);
      }
    }

    for (int a = 0; a < ndof; ++a) {
      const int ga = FeSpace::dof(nodes[a / 2], a % 2);
      inc.rhs[ga] += local_rhs[a];
      for (int b = 0; b < ndof; ++b)
        inc.matrix.emplace_back(ga, FeSpace::dof(nodes[b / 2], b % 2),
                                local(a, b));
    }
  }
  return inc;
}

struct FixedPointResult {
  DiscreteSolution solution;
  int iterations = 0;
  std::vector<double> increments;  // energy norm of u - w per solve
  ActiveSet final_active;
};

// Contact iteration: start from w = 0, solve with active sets classified from
// the previous iterate, stop when the energy norm of the increment drops
// below the tolerance.
inline FixedPointResult solve_fixed_point(const ContactProblem& p,
                                          const SolverConfig& config = {}) {
  if (!(config.tolerance > 0.0) || config.max_iterations < 1)
    throw std::invalid_argument("solve_fixed_point: bad solver configuration");

  const FeSpace& space = *p.space;
  const std::vector<Triplet> k0 = stiffness_triplets(space, p.material);
  const SpMat stiffness = matrix_from_triplets(space.total_dofs(), k0);
  const VecX load = assemble_load(space, p.body_force);
  const std::vector<char> constrained = space.dirichlet_dof_flags();
  const VecX zero_values = VecX::Zero(space.total_dofs());

  DiscreteSolution w = zero_solution(space);
  std::vector<double> increments;
  ActiveSet active;
  // The iteration map is deterministic and the active-set state space is
  // finite, so revisiting a state proves a cycle.
  std::vector<std::vector<char>> seen_states;
  for (int it = 1; it <= config.max_iterations; ++it) {
    active = classify(p, w, config);

    std::vector<char> state;
    state.reserve(3 * active.in_contact.size());
    for (std::size_t i = 0; i < active.in_contact.size(); ++i) {
      state.push_back(active.in_contact[i]);
      state.push_back(active.sticking[i]);
      state.push_back(active.slip_sign[i] > 0.0   ? 1
                      : active.slip_sign[i] < 0.0 ? 2
                                                  : 0);
    }
    for (std::size_t prev = 0; prev + 1 < seen_states.size(); ++prev)
      if (seen_states[prev] == state)
        throw nonconvergence_error(
            "contact iteration entered a cycle of length " +
                std::to_string(seen_states.size() - prev) + " after " +
                std::to_string(it - 1) + " solves",
            increments);
    seen_states.push_back(std::move(state));

    NitscheIncrement nitsche = assemble_nitsche(p, active);

    std::vector<Triplet> triplets;
    triplets.reserve(k0.size() + nitsche.matrix.size());
    triplets.insert(triplets.end(), k0.begin(), k0.end());
    triplets.insert(triplets.end(), nitsche.matrix.begin(),
                    nitsche.matrix.end());
    VecX rhs = load + nitsche.rhs;
    const SpMat system = assemble_constrained(space.total_dofs(), triplets, rhs,
                                              constrained, zero_values);
    const VecX u = solve_spd(system, rhs, it);

    const VecX d = u - w.coefficients;
    const double inc =
        std::sqrt(std::max(energy_norm_squared(stiffness, d), 0.0));
    increments.push_back(inc);
    w.coefficients = u;
    if (inc < config.tolerance)
      return {std::move(w), it, std::move(increments), std::move(active)};
  }
  throw nonconvergence_error(
      "contact iteration did not converge in " +
          std::to_string(config.max_iterations) + " solves",
      increments);
}

// Recovered contact pressure and tangential traction on the contact boundary.
struct MultiplierField {
  struct Facet {
    int facet_id = -1;
    std::array<double, 3> lambda_n_poly{};
    std::array<double, 3> lambda_t_poly{};
    std::vector<double> lambda_n;  // values at quadrature points
    std::vector<double> lambda_t;
  };
  std::vector<Facet> facets;
};

namespace detail {

// Least-squares fit of point values onto {1, s, s^2} with the facet rule;
// with three Gauss points this interpolates.
inline std::array<double, 3> fit_facet_poly(const std::vector<double>& s,
                                            const std::vector<double>& w,
                                            const std::vector<double>& values) {
  Eigen::Matrix3d mass = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (std::size_t q = 0; q < s.size(); ++q) {
    const Eigen::Vector3d b(1.0, s[q], s[q] * s[q]);
    mass += w[q] * b * b.transpose();
    rhs += w[q] * values[q] * b;
  }
  const Eigen::Vector3d c = mass.ldlt().solve(rhs);
  return {c[0], c[1], c[2]};
}

}  // namespace detail

// lambda_n = max(gamma_n, 0); lambda_t = gamma_t clamped to [-kappa, kappa].
inline MultiplierField recover_multipliers(const ContactProblem& p,
                                           const DiscreteSolution& u) {
  MultiplierField field;
  for (std::size_t fpos = 0; fpos < p.facets.size(); ++fpos) {
    const ContactFacet& facet = p.facets[fpos];
    MultiplierField::Facet out;
    out.facet_id = facet.facet_id;
    std::vector<double> s, w;
    for (std::size_t q = 0; q < facet.qp.size(); ++q) {
      const double gn = gamma_n(p, u, static_cast<int>(fpos), static_cast<int>(q));
      const double gt = gamma_t(p, u, static_cast<int>(fpos), static_cast<int>(q));
      const double kappa = facet.kappa_q[q];
      const double ln = gn > 0.0 ? gn : 0.0;
      const double lt = std::abs(gt) < kappa ? gt : (gt >= 0.0 ? kappa : -kappa);
      out.lambda_n.push_back(ln);
      out.lambda_t.push_back(lt);
      s.push_back(facet.qp[q].s);
      w.push_back(facet.qp[q].weight);
    }
    out.lambda_n_poly = detail::fit_facet_poly(s, w, out.lambda_n);
    out.lambda_t_poly = detail::fit_facet_poly(s, w, out.lambda_t);
    field.facets.push_back(std::move(out));
  }
  return field;
}

// CSV trace "y,lambda_n,lambda_t", one row per contact quadrature point
// sorted by the y coordinate.
inline void write_multiplier_trace(std::ostream& os, const ContactProblem& p,
                                   const MultiplierField& field) {
  struct Row {
    double y, ln, lt;
  };
  std::vector<Row> rows;
  for (std::size_t f = 0; f < field.facets.size(); ++f)
    for (std::size_t q = 0; q < field.facets[f].lambda_n.size(); ++q)
      rows.push_back({p.facets[f].qp[q].x.y(), field.facets[f].lambda_n[q],
                      field.facets[f].lambda_t[q]});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.y < b.y; });
  os << "y,lambda_n,lambda_t\n";
  for (const auto& r : rows)
    os << detail::format_double(r.y) << "," << detail::format_double(r.ln)
       << "," << detail::format_double(r.lt) << "\n";
}

}  // namespace tresca
