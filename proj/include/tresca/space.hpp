#pragma once

#include <array>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tresca/mesh.hpp"
#include "tresca/quadrature.hpp"

namespace tresca {

// Scalar Lagrange basis data at one point, mapped to physical coordinates.
struct BasisEval {
  int count = 0;
  std::array<double, 6> value{};
  std::array<Vec2, 6> grad{};
  std::array<Mat2, 6> hess{};
};

struct TriangleMap {
  Vec2 p0;
  Mat2 jac;      // columns p1-p0, p2-p0
  Mat2 jac_inv;
  double det;
};

// Continuous vector Lagrange space of order 1 or 2 with two displacement
// components per scalar node, interleaved as dof = 2*node + component.
class FeSpace {
 public:
  FeSpace(const Mesh& mesh, int order) : mesh_(&mesh), order_(order) {
    if (order != 1 && order != 2)
      throw std::invalid_argument("FeSpace: order must be 1 or 2");

    const int nv = mesh.num_vertices();
    num_scalar_nodes_ = nv;
    tri_nodes_.resize(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const auto& tri = mesh.triangle(t);
      tri_nodes_[t] = {tri[0], tri[1], tri[2], -1, -1, -1};
      if (order_ == 2) {
        for (int k = 0; k < 3; ++k) {
          const auto key = detail::edge_key(tri[k], tri[(k + 1) % 3]);
          auto [it, inserted] = edge_node_.try_emplace(key, num_scalar_nodes_);
          if (inserted) ++num_scalar_nodes_;
          tri_nodes_[t][3 + k] = it->second;
        }
      }
    }

    node_on_dirichlet_.assign(num_scalar_nodes_, 0);
    for (const auto& f : mesh.boundary_facets()) {
      if (f.tag != BoundaryTag::Dirichlet) continue;
      node_on_dirichlet_[f.a] = 1;
      node_on_dirichlet_[f.b] = 1;
      if (order_ == 2) node_on_dirichlet_[edge_node(f.a, f.b)] = 1;
    }

    node_position_.resize(num_scalar_nodes_);
    for (int v = 0; v < nv; ++v) node_position_[v] = mesh.vertex(v);
    for (const auto& [key, id] : edge_node_)
      node_position_[id] = 0.5 * (mesh.vertex(key.first) + mesh.vertex(key.second));
  }

  const Mesh& mesh() const { return *mesh_; }
  int order() const { return order_; }
  int num_scalar_nodes() const { return num_scalar_nodes_; }
  int total_dofs() const { return 2 * num_scalar_nodes_; }
  int nodes_per_triangle() const { return order_ == 1 ? 3 : 6; }
  const std::array<int, 6>& triangle_nodes(int t) const { return tri_nodes_[t]; }
  static int dof(int scalar_node, int component) {
    return 2 * scalar_node + component;
  }

  int edge_node(int a, int b) const {
    auto it = edge_node_.find(detail::edge_key(a, b));
    return it == edge_node_.end() ? -1 : it->second;
  }

  bool node_on_dirichlet(int node) const { return node_on_dirichlet_[node]; }

  // One flag per dof, both components constrained on Dirichlet nodes.
  std::vector<char> dirichlet_dof_flags() const {
    std::vector<char> flags(total_dofs(), 0);
    for (int n = 0; n < num_scalar_nodes_; ++n)
      if (node_on_dirichlet_[n]) flags[dof(n, 0)] = flags[dof(n, 1)] = 1;
    return flags;
  }

  std::vector<int> dirichlet_dofs() const {
    std::vector<int> dofs;
    for (int n = 0; n < num_scalar_nodes_; ++n)
      if (node_on_dirichlet_[n]) {
        dofs.push_back(dof(n, 0));
        dofs.push_back(dof(n, 1));
      }
    return dofs;
  }

  const Vec2& node_position(int node) const { return node_position_.at(node); }

 private:
  const Mesh* mesh_;
  int order_;
  int num_scalar_nodes_ = 0;
  std::vector<std::array<int, 6>> tri_nodes_;
  std::map<std::pair<int, int>, int> edge_node_;
  std::vector<char> node_on_dirichlet_;
  std::vector<Vec2> node_position_;
};

inline TriangleMap triangle_map(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangle(t);
  TriangleMap m;
  m.p0 = mesh.vertex(tri[0]);
  m.jac.col(0) = mesh.vertex(tri[1]) - m.p0;
  m.jac.col(1) = mesh.vertex(tri[2]) - m.p0;
  m.det = m.jac.determinant();
  m.jac_inv = m.jac.inverse();
  return m;
}

inline Vec2 map_to_physical(const TriangleMap& m, const Vec2& ref) {
  return m.p0 + m.jac * ref;
}

inline Vec2 map_to_reference(const TriangleMap& m, const Vec2& x) {
  return m.jac_inv * (x - m.p0);
}

namespace detail {

// Reference P1 basis: barycentric coordinates on (0,0)-(1,0)-(0,1).
inline void eval_p1(const Vec2& p, BasisEval& out) {
  const double x = p.x(), y = p.y();
  out.count = 3;
  out.value = {1.0 - x - y, x, y, 0, 0, 0};
  out.grad[0] = Vec2(-1.0, -1.0);
  out.grad[1] = Vec2(1.0, 0.0);
  out.grad[2] = Vec2(0.0, 1.0);
  for (int i = 0; i < 3; ++i) out.hess[i].setZero();
}

// Reference P2 basis, nodes (v0,v1,v2,m01,m12,m20).
inline void eval_p2(const Vec2& p, BasisEval& out) {
  const double x = p.x(), y = p.y();
  const double l0 = 1.0 - x - y;
  out.count = 6;
  out.value = {l0 * (2.0 * l0 - 1.0), x * (2.0 * x - 1.0), y * (2.0 * y - 1.0),
               4.0 * x * l0,          4.0 * x * y,          4.0 * y * l0};
  out.grad[0] = Vec2(1.0 - 4.0 * l0, 1.0 - 4.0 * l0);
  out.grad[1] = Vec2(4.0 * x - 1.0, 0.0);
  out.grad[2] = Vec2(0.0, 4.0 * y - 1.0);
  out.grad[3] = Vec2(4.0 * (l0 - x), -4.0 * x);
  out.grad[4] = Vec2(4.0 * y, 4.0 * x);
  out.grad[5] = Vec2(-4.0 * y, 4.0 * (l0 - y));
  out.hess[0] << 4, 4, 4, 4;
  out.hess[1] << 4, 0, 0, 0;
  out.hess[2] << 0, 0, 0, 4;
  out.hess[3] << -8, -4, -4, 0;
  out.hess[4] << 0, 4, 4, 0;
  out.hess[5] << 0, -4, -4, -8;
}

}  // namespace detail

// Basis values, physical gradients and (exact, affine-map) second derivatives.
inline BasisEval eval_basis(int order, const TriangleMap& map, const Vec2& ref) {
  BasisEval out;
  if (order == 1)
    detail::eval_p1(ref, out);
  else
    detail::eval_p2(ref, out);
  const Mat2 jit = map.jac_inv.transpose();
  for (int i = 0; i < out.count; ++i) {
    out.grad[i] = jit * out.grad[i];
    out.hess[i] = jit * out.hess[i] * map.jac_inv;
  }
  return out;
}

inline BasisEval eval_basis(const FeSpace& space, int t, const Vec2& ref) {
  return eval_basis(space.order(), triangle_map(space.mesh(), t), ref);
}

// Discontinuous per-facet polynomials on the contact boundary. The order is
// fixed at 2 so that projections of order <= 2 finite element traces are exact
// on straight facets.
class TraceSpace {
 public:
  static constexpr int order = 2;

  explicit TraceSpace(const Mesh& mesh) : mesh_(&mesh) {
    const auto& bf = mesh.boundary_facets();
    for (int f = 0; f < static_cast<int>(bf.size()); ++f)
      if (bf[f].tag == BoundaryTag::Contact) facets_.push_back(f);
    rule_ = facet_quadrature(4);
  }

  const Mesh& mesh() const { return *mesh_; }
  const std::vector<int>& facets() const { return facets_; }
  const SegmentRule& rule() const { return rule_; }

  // L2-projection onto {1, s, s^2} with s in [0,1] along the facet.
  std::array<double, 3> project(int facet,
                                const std::function<double(const Vec2&)>& f) const {
    const auto& bf = mesh_->boundary_facets()[facet];
    const Vec2 pa = mesh_->vertex(bf.a), pb = mesh_->vertex(bf.b);
    const double len = (pb - pa).norm();
    Eigen::Matrix3d mass = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (std::size_t q = 0; q < rule_.points.size(); ++q) {
      const double s = rule_.points[q];
      const double w = rule_.weights[q] * len;
      const Eigen::Vector3d b(1.0, s, s * s);
      mass += w * b * b.transpose();
      rhs += w * f(pa + s * (pb - pa)) * b;
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(mass);
    if (!lu.isInvertible())
      throw std::runtime_error("TraceSpace::project: degenerate facet");
    const Eigen::Vector3d c = lu.solve(rhs);
    return {c[0], c[1], c[2]};
  }

 private:
  const Mesh* mesh_;
  std::vector<int> facets_;
  SegmentRule rule_;
};

inline std::array<double, 3> project_trace(
    const TraceSpace& space, int facet,
    const std::function<double(const Vec2&)>& f) {
  return space.project(facet, f);
}

inline double eval_facet_poly(const std::array<double, 3>& c, double s) {
  return c[0] + s * (c[1] + s * c[2]);
}

}  // namespace tresca
