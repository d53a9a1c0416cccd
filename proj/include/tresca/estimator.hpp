#pragma once

#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "tresca/contact.hpp"
#include "tresca/elasticity.hpp"
#include "tresca/mesh.hpp"
#include "tresca/parallel.hpp"

namespace tresca {

// Residual error indicators; all per-item storage holds squared values.
struct IndicatorSet {
  std::vector<double> eta_K2;        // per triangle
  std::vector<InteriorEdge> edges;   // interior edges, parallel to eta_int2
  std::vector<double> eta_int2;
  std::vector<int> neumann_facets;   // facet ids, parallel to eta_neu2
  std::vector<int> neumann_owners;
  std::vector<double> eta_neu2;
  std::vector<int> contact_facets;   // facet ids, parallel to eta_con2
  std::vector<int> contact_owners;
  std::vector<double> eta_con2;
  std::array<double, 3> S_components{};  // penetration, gap-pressure, friction
  std::vector<double> osc2;          // per triangle
  double eta_total2 = 0.0;
  double S_total2 = 0.0;

  double eta_total() const { return std::sqrt(eta_total2); }
  double S_total() const { return std::sqrt(S_total2); }

  // Facet contributions attributed to adjacent triangles: interior edges
  // split half and half, boundary facets to their unique owner.
  std::vector<double> element_attribution() const {
    std::vector<double> elem2(eta_K2);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      elem2[edges[e].left] += 0.5 * eta_int2[e];
      elem2[edges[e].right] += 0.5 * eta_int2[e];
    }
    for (std::size_t f = 0; f < neumann_owners.size(); ++f)
      elem2[neumann_owners[f]] += eta_neu2[f];
    for (std::size_t f = 0; f < contact_owners.size(); ++f)
      elem2[contact_owners[f]] += eta_con2[f];
    return elem2;
  }
};

// eta_K = h_K || div sigma(u_h) + f ||_{0,K}
inline double element_residual(const ContactProblem& p,
                               const DiscreteSolution& u, int t) {
  const Mesh& mesh = *p.mesh;
  const TriangleMap map = triangle_map(mesh, t);
  const QuadratureRule rule = interior_quadrature(2 * u.space->order());
  double acc = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const BasisEval basis = eval_basis(u.space->order(), map, rule.points[q]);
    const Vec2 r = stress_divergence(p.material, u, t, basis) +
                   p.body_force(map_to_physical(map, rule.points[q]));
    acc += rule.weights[q] * map.det * r.squaredNorm();
  }
  return triangle_diameter(mesh, t) * std::sqrt(std::max(acc, 0.0));
}

namespace detail {

inline Mat2 stress_at(const ContactProblem& p, const DiscreteSolution& u,
                      int t, const TriangleMap& map, const Vec2& x) {
  const BasisEval basis =
      eval_basis(u.space->order(), map, map_to_reference(map, x));
  return stress(p.material, symmetric_part(displacement_gradient(u, t, basis)));
}

}  // namespace detail

// eta_{E,Omega} = sqrt(h_E) || [sigma(u_h) n] ||_{0,E}
inline double edge_jump(const ContactProblem& p, const DiscreteSolution& u,
                        const InteriorEdge& edge) {
  const Mesh& mesh = *p.mesh;
  const Vec2 pa = mesh.vertex(edge.a), pb = mesh.vertex(edge.b);
  const double len = (pb - pa).norm();
  const TriangleMap map_l = triangle_map(mesh, edge.left);
  const TriangleMap map_r = triangle_map(mesh, edge.right);
  const SegmentRule rule = facet_quadrature(4);
  double acc = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Vec2 x = pa + rule.points[q] * (pb - pa);
    const Vec2 jump = (detail::stress_at(p, u, edge.left, map_l, x) -
                       detail::stress_at(p, u, edge.right, map_r, x)) *
                      edge.normal;
    acc += rule.weights[q] * len * jump.squaredNorm();
  }
  return std::sqrt(len * std::max(acc, 0.0));
}

// eta_{E,Gamma_N} = sqrt(h_E) || sigma(u_h) n ||_{0,E}
inline double neumann_residual(const ContactProblem& p,
                               const DiscreteSolution& u, int facet,
                               int owner) {
  const Mesh& mesh = *p.mesh;
  const auto& bf = mesh.boundary_facets()[facet];
  const Vec2 pa = mesh.vertex(bf.a), pb = mesh.vertex(bf.b);
  const double len = (pb - pa).norm();
  const TriangleMap map = triangle_map(mesh, owner);

  const auto& tri = mesh.triangle(owner);
  int opposite = -1;
  for (int k = 0; k < 3; ++k)
    if (tri[k] != bf.a && tri[k] != bf.b) opposite = tri[k];
  Vec2 n(pb.y() - pa.y(), pa.x() - pb.x());
  n.normalize();
  if (n.dot(mesh.vertex(opposite) - pa) > 0.0) n = -n;

  const SegmentRule rule = facet_quadrature(4);
  double acc = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Vec2 x = pa + rule.points[q] * (pb - pa);
    const Vec2 traction = detail::stress_at(p, u, owner, map, x) * n;
    acc += rule.weights[q] * len * traction.squaredNorm();
  }
  return std::sqrt(len * std::max(acc, 0.0));
}

inline double neumann_residual(const ContactProblem& p,
                               const DiscreteSolution& u, int facet) {
  return neumann_residual(p, u, facet, facet_owners(*p.mesh)[facet]);
}

// eta_{E,Gamma} = sqrt(h_E) || lambda_h + sigma(u_h) n ||_{0,E}
inline double contact_residual(const ContactProblem& p,
                               const DiscreteSolution& u,
                               const MultiplierField& multipliers,
                               int facet_pos) {
  const ContactFacet& facet = p.facets[facet_pos];
  const MultiplierField::Facet& lam = multipliers.facets[facet_pos];
  double acc = 0.0;
  for (std::size_t q = 0; q < facet.qp.size(); ++q) {
    const auto st = detail::boundary_state(p, u, facet, q);
    const Vec2 residual =
        (lam.lambda_n[q] + st.sigma_n) * p.normal +
        (lam.lambda_t[q] + st.sigma_t) * p.tangent;
    acc += facet.qp[q].weight * residual.squaredNorm();
  }
  return std::sqrt(facet.h * std::max(acc, 0.0));
}

struct ConsistencyTerms {
  std::array<double, 3> components{};  // penetration, gap-pressure, friction
  double total = 0.0;                  // sqrt of the component sum
};

// S^2 = ||(g - u_n)_-||^2 + ((g - u_n)_+, lambda_n) + int kappa|u_t| - u_t lambda_t
inline ConsistencyTerms contact_consistency(const ContactProblem& p,
                                            const DiscreteSolution& u,
                                            const MultiplierField& multipliers) {
  ConsistencyTerms out;
  for (std::size_t f = 0; f < p.facets.size(); ++f) {
    const ContactFacet& facet = p.facets[f];
    const MultiplierField::Facet& lam = multipliers.facets[f];
    for (std::size_t q = 0; q < facet.qp.size(); ++q) {
      const auto st = detail::boundary_state(p, u, facet, q);
      const double w = facet.qp[q].weight;
      const double slack = p.gap(facet.qp[q].x) - st.u_n;  // true gap here
      const double neg = std::max(-slack, 0.0), pos = std::max(slack, 0.0);
      out.components[0] += w * neg * neg;
      out.components[1] += w * pos * lam.lambda_n[q];
      out.components[2] +=
          w * (facet.kappa_q[q] * std::abs(st.u_t) - st.u_t * lam.lambda_t[q]);
    }
  }
  double sum = 0.0;
  for (double& c : out.components) {
    if (c < 0.0) {
      if (c < -1e-14)
        throw std::runtime_error(
            "contact_consistency: negative term indicates a multiplier bound "
            "violation");
      c = 0.0;
    }
    sum += c;
  }
  out.total = std::sqrt(sum);
  return out;
}

// osc_K = h_K || f - Pi_m f ||_{0,K} with the elementwise L2 projection onto
// [P_m]^2. The quadrature degree is 2m+2: a degree-2m rule has as many points
// as P_m has modes, which would make the discrete projection interpolate.
inline double oscillation(const ContactProblem& p, int t) {
  const FeSpace& space = *p.space;
  const Mesh& mesh = *p.mesh;
  const TriangleMap map = triangle_map(mesh, t);
  const QuadratureRule rule = interior_quadrature(2 * space.order() + 2);
  const int nl = space.nodes_per_triangle();
  const int nq = static_cast<int>(rule.points.size());

  Eigen::MatrixXd basis_vals(nq, nl);
  Eigen::MatrixXd fvals(nq, 2);
  Eigen::VectorXd w(nq);
  for (int q = 0; q < nq; ++q) {
    const BasisEval basis = eval_basis(space.order(), map, rule.points[q]);
    for (int k = 0; k < nl; ++k) basis_vals(q, k) = basis.value[k];
    const Vec2 f = p.body_force(map_to_physical(map, rule.points[q]));
    fvals(q, 0) = f[0];
    fvals(q, 1) = f[1];
    w[q] = rule.weights[q] * map.det;
  }
  const Eigen::MatrixXd wb = w.asDiagonal() * basis_vals;
  const Eigen::MatrixXd mass = basis_vals.transpose() * wb;
  const Eigen::MatrixXd coef =
      mass.ldlt().solve(basis_vals.transpose() * (w.asDiagonal() * fvals));
  const Eigen::MatrixXd res = fvals - basis_vals * coef;
  double acc = 0.0;
  for (int q = 0; q < nq; ++q) acc += w[q] * res.row(q).squaredNorm();
  return triangle_diameter(mesh, t) * std::sqrt(std::max(acc, 0.0));
}

// All indicators and the consistency terms for one discrete solution.
inline IndicatorSet total(const ContactProblem& p, const DiscreteSolution& u,
                          const MultiplierField& multipliers) {
  const Mesh& mesh = *p.mesh;
  IndicatorSet ind;
  const int nt = mesh.num_triangles();

  ind.eta_K2.assign(nt, 0.0);
  ind.osc2.assign(nt, 0.0);
  parallel_chunks(nt, 64, [&](int, int begin, int end) {
    for (int t = begin; t < end; ++t) {
      const double ek = element_residual(p, u, t);
      ind.eta_K2[t] = ek * ek;
      const double o = oscillation(p, t);
      ind.osc2[t] = o * o;
    }
  });

  ind.edges = interior_edges(mesh);
  const int ne = static_cast<int>(ind.edges.size());
  ind.eta_int2.assign(ne, 0.0);
  parallel_chunks(ne, 64, [&](int, int begin, int end) {
    for (int e = begin; e < end; ++e) {
      const double v = edge_jump(p, u, ind.edges[e]);
      ind.eta_int2[e] = v * v;
    }
  });

  const auto owners = facet_owners(mesh);
  const auto& bf = mesh.boundary_facets();
  for (int f = 0; f < static_cast<int>(bf.size()); ++f)
    if (bf[f].tag == BoundaryTag::Neumann) {
      ind.neumann_facets.push_back(f);
      ind.neumann_owners.push_back(owners[f]);
    }
  ind.eta_neu2.assign(ind.neumann_facets.size(), 0.0);
  parallel_chunks(static_cast<int>(ind.neumann_facets.size()), 64,
                  [&](int, int begin, int end) {
                    for (int f = begin; f < end; ++f) {
                      const double v = neumann_residual(
                          p, u, ind.neumann_facets[f], ind.neumann_owners[f]);
                      ind.eta_neu2[f] = v * v;
                    }
                  });

  ind.eta_con2.assign(p.facets.size(), 0.0);
  for (std::size_t f = 0; f < p.facets.size(); ++f) {
    ind.contact_facets.push_back(p.facets[f].facet_id);
    ind.contact_owners.push_back(p.facets[f].tri);
    const double v = contact_residual(p, u, multipliers, static_cast<int>(f));
    ind.eta_con2[f] = v * v;
  }

  double total2 = 0.0;
  for (double v : ind.eta_K2) total2 += v;
  for (double v : ind.eta_int2) total2 += v;
  for (double v : ind.eta_neu2) total2 += v;
  for (double v : ind.eta_con2) total2 += v;
  ind.eta_total2 = total2;

  const ConsistencyTerms s = contact_consistency(p, u, multipliers);
  ind.S_components = s.components;
  ind.S_total2 = s.total * s.total;
  return ind;
}

// CSV dump "kind,id,value2" with kind in {K, E_int, E_neu, E_con}.
inline void write_indicator_dump(std::ostream& os, const IndicatorSet& ind) {
  os << "kind,id,value2\n";
  for (std::size_t t = 0; t < ind.eta_K2.size(); ++t)
    os << "K," << t << "," << detail::format_double(ind.eta_K2[t]) << "\n";
  for (std::size_t e = 0; e < ind.eta_int2.size(); ++e)
    os << "E_int," << e << "," << detail::format_double(ind.eta_int2[e]) << "\n";
  for (std::size_t f = 0; f < ind.eta_neu2.size(); ++f)
    os << "E_neu," << ind.neumann_facets[f] << ","
       << detail::format_double(ind.eta_neu2[f]) << "\n";
  for (std::size_t f = 0; f < ind.eta_con2.size(); ++f)
    os << "E_con," << ind.contact_facets[f] << ","
       << detail::format_double(ind.eta_con2[f]) << "\n";
}

}  // namespace tresca
