#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tresca/errors.hpp"
#include "tresca/parallel.hpp"
#include "tresca/space.hpp"

namespace tresca {

using SpMat = Eigen::SparseMatrix<double>;
using VecX = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

// Plane-strain isotropic material.
struct MaterialModel {
  double youngs_modulus = 1.0;
  double poisson_ratio = 0.3;
  double lame_mu = 0.0;
  double lame_lambda = 0.0;
};

inline std::pair<double, double> lame_from_engineering(double E, double nu) {
  if (!(E > 0.0))
    throw std::invalid_argument("lame_from_engineering: E must be positive");
  if (!(nu > -1.0 && nu < 0.5))
    throw std::invalid_argument(
        "lame_from_engineering: nu must lie in (-1, 0.5)");
  const double mu = E / (2.0 * (1.0 + nu));
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  return {mu, lambda};
}

inline MaterialModel make_material(double E, double nu) {
  auto [mu, lambda] = lame_from_engineering(E, nu);
  return {E, nu, mu, lambda};
}

// Displacement field as coefficients over a vector Lagrange space.
struct DiscreteSolution {
  const FeSpace* space = nullptr;
  VecX coefficients;
};

inline DiscreteSolution zero_solution(const FeSpace& space) {
  return {&space, VecX::Zero(space.total_dofs())};
}

inline Mat2 symmetric_part(const Mat2& g) {
  return 0.5 * (g + g.transpose());
}

// Displacement gradient, rows are components: grad(i,j) = d u_i / d x_j.
inline Mat2 displacement_gradient(const DiscreteSolution& u, int t,
                                  const BasisEval& basis) {
  const auto& nodes = u.space->triangle_nodes(t);
  Mat2 g = Mat2::Zero();
  for (int k = 0; k < basis.count; ++k)
    for (int c = 0; c < 2; ++c)
      g.row(c) += u.coefficients[FeSpace::dof(nodes[k], c)] *
                  basis.grad[k].transpose();
  return g;
}

inline Vec2 displacement_value(const DiscreteSolution& u, int t,
                               const BasisEval& basis) {
  const auto& nodes = u.space->triangle_nodes(t);
  Vec2 v = Vec2::Zero();
  for (int k = 0; k < basis.count; ++k)
    for (int c = 0; c < 2; ++c)
      v[c] += u.coefficients[FeSpace::dof(nodes[k], c)] * basis.value[k];
  return v;
}

inline Mat2 strain(const DiscreteSolution& u, int t, const Vec2& ref) {
  const BasisEval basis = eval_basis(*u.space, t, ref);
  return symmetric_part(displacement_gradient(u, t, basis));
}

inline Mat2 stress(const MaterialModel& m, const Mat2& eps) {
  return 2.0 * m.lame_mu * eps +
         m.lame_lambda * eps.trace() * Mat2::Identity();
}

// div sigma(u_h) from second derivatives; zero for order 1.
inline Vec2 stress_divergence(const MaterialModel& m, const DiscreteSolution& u,
                              int t, const BasisEval& basis) {
  const auto& nodes = u.space->triangle_nodes(t);
  Vec2 div = Vec2::Zero();
  for (int k = 0; k < basis.count; ++k) {
    const Mat2& h = basis.hess[k];
    const double lap = h(0, 0) + h(1, 1);
    for (int c = 0; c < 2; ++c) {
      const double coef = u.coefficients[FeSpace::dof(nodes[k], c)];
      for (int i = 0; i < 2; ++i)
        div[i] += coef * ((m.lame_mu + m.lame_lambda) * h(i, c) +
                          (i == c ? m.lame_mu * lap : 0.0));
    }
  }
  return div;
}

namespace detail {

// sigma(phi_j e_d) : eps(phi_i e_c) for gradients a = grad phi_j, b = grad phi_i.
inline double elastic_pairing(const MaterialModel& m, const Vec2& a, int d,
                              const Vec2& b, int c) {
  double v = m.lame_mu * a[c] * b[d] + m.lame_lambda * a[d] * b[c];
  if (c == d) v += m.lame_mu * a.dot(b);
  return v;
}

}  // namespace detail

// Triplets of (sigma(phi_j), eps(phi_i))_Omega; no constraints applied.
inline std::vector<Triplet> stiffness_triplets(const FeSpace& space,
                                               const MaterialModel& material) {
  const Mesh& mesh = space.mesh();
  const QuadratureRule rule = interior_quadrature(2 * space.order());
  const int nl = space.nodes_per_triangle();
  constexpr int chunk = 256;
  const int num_chunks = (mesh.num_triangles() + chunk - 1) / chunk;
  std::vector<std::vector<Triplet>> buffers(num_chunks);

  parallel_chunks(mesh.num_triangles(), chunk, [&](int ci, int begin, int end) {
    auto& buf = buffers[ci];
    buf.reserve((end - begin) * 4 * nl * nl);
    Eigen::Matrix<double, 12, 12> local;
    for (int t = begin; t < end; ++t) {
      const TriangleMap map = triangle_map(mesh, t);
      local.setZero();
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const BasisEval basis = eval_basis(space.order(), map, rule.points[q]);
        const double w = rule.weights[q] * map.det;
        for (int i = 0; i < nl; ++i)
          for (int c = 0; c < 2; ++c)
            for (int j = 0; j < nl; ++j)
              for (int d = 0; d < 2; ++d)
                local(2 * i + c, 2 * j + d) +=
                    w * detail::elastic_pairing(material, basis.grad[j], d,
                                                basis.grad[i], c);
      }
      const auto& nodes = space.triangle_nodes(t);
      for (int i = 0; i < nl; ++i)
        for (int c = 0; c < 2; ++c)
          for (int j = 0; j < nl; ++j)
            for (int d = 0; d < 2; ++d)
              buf.emplace_back(FeSpace::dof(nodes[i], c),
                               FeSpace::dof(nodes[j], d),
                               local(2 * i + c, 2 * j + d));
    }
  });

  std::vector<Triplet> triplets;
  std::size_t total = 0;
  for (const auto& b : buffers) total += b.size();
  triplets.reserve(total);
  for (const auto& b : buffers) triplets.insert(triplets.end(), b.begin(), b.end());
  return triplets;
}

inline SpMat matrix_from_triplets(int n, const std::vector<Triplet>& triplets) {
  SpMat m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

inline SpMat assemble_stiffness(const FeSpace& space,
                                const MaterialModel& material) {
  return matrix_from_triplets(space.total_dofs(),
                              stiffness_triplets(space, material));
}

inline VecX assemble_load(const FeSpace& space,
                          const std::function<Vec2(const Vec2&)>& f) {
  const Mesh& mesh = space.mesh();
  const QuadratureRule rule = interior_quadrature(2 * space.order());
  const int nl = space.nodes_per_triangle();
  VecX load = VecX::Zero(space.total_dofs());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleMap map = triangle_map(mesh, t);
    const auto& nodes = space.triangle_nodes(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const BasisEval basis = eval_basis(space.order(), map, rule.points[q]);
      const double w = rule.weights[q] * map.det;
      const Vec2 fx = f(map_to_physical(map, rule.points[q]));
      for (int k = 0; k < nl; ++k)
        for (int c = 0; c < 2; ++c)
          load[FeSpace::dof(nodes[k], c)] += w * fx[c] * basis.value[k];
    }
  }
  return load;
}

// sqrt of (sigma(u), eps(u))_Omega by quadrature.
inline double energy_norm(const MaterialModel& material,
                          const DiscreteSolution& u) {
  const Mesh& mesh = u.space->mesh();
  const QuadratureRule rule = interior_quadrature(2 * u.space->order());
  double acc = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleMap map = triangle_map(mesh, t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const BasisEval basis = eval_basis(u.space->order(), map, rule.points[q]);
      const Mat2 eps = symmetric_part(displacement_gradient(u, t, basis));
      acc += rule.weights[q] * map.det *
             stress(material, eps).cwiseProduct(eps).sum();
    }
  }
  return std::sqrt(std::max(acc, 0.0));
}

// Vectorial H1 norm: sqrt(|u|_0^2 + |grad u|_0^2).
inline double h1_norm(const DiscreteSolution& u) {
  const Mesh& mesh = u.space->mesh();
  const QuadratureRule rule = interior_quadrature(2 * u.space->order());
  double acc = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleMap map = triangle_map(mesh, t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const BasisEval basis = eval_basis(u.space->order(), map, rule.points[q]);
      const Vec2 val = displacement_value(u, t, basis);
      const Mat2 grad = displacement_gradient(u, t, basis);
      acc += rule.weights[q] * map.det * (val.squaredNorm() + grad.squaredNorm());
    }
  }
  return std::sqrt(std::max(acc, 0.0));
}

inline double energy_norm_squared(const SpMat& stiffness, const VecX& d) {
  return d.dot(stiffness * d);
}

// Assembles the constrained system: constrained rows/columns are eliminated,
// replaced by a unit diagonal, and prescribed values are moved to the rhs.
inline SpMat assemble_constrained(int n, const std::vector<Triplet>& triplets,
                                  VecX& rhs, const std::vector<char>& constrained,
                                  const VecX& values) {
  std::vector<Triplet> kept;
  kept.reserve(triplets.size() + n);
  for (const auto& tr : triplets) {
    const bool ci = constrained[tr.row()], cj = constrained[tr.col()];
    if (ci) continue;
    if (cj) {
      rhs[tr.row()] -= tr.value() * values[tr.col()];
      continue;
    }
    kept.push_back(tr);
  }
  for (int i = 0; i < n; ++i)
    if (constrained[i]) {
      kept.emplace_back(i, i, 1.0);
      rhs[i] = values[i];
    }
  return matrix_from_triplets(n, kept);
}

// Sparse symmetric direct solve (LDLT with fill-reducing ordering). Loss of
// positive definiteness or an inaccurate solution raises singular_system_error.
inline VecX solve_spd(const SpMat& matrix, const VecX& rhs, int iteration = 0) {
  Eigen::SimplicialLDLT<SpMat> solver;
  solver.compute(matrix);
  if (solver.info() != Eigen::Success)
    throw singular_system_error(
        "linear solve failed to factorize at contact iteration " +
            std::to_string(iteration),
        iteration);
  const VecX& d = solver.vectorD();
  for (int i = 0; i < d.size(); ++i)
    if (!(d[i] > 0.0) || !std::isfinite(d[i]))
      throw singular_system_error(
          "system matrix lost positive definiteness at contact iteration " +
              std::to_string(iteration),
          iteration);
  VecX x = solver.solve(rhs);
  const double scale =
      std::max(rhs.cwiseAbs().maxCoeff(), matrix.coeffs().abs().maxCoeff() *
                                              x.cwiseAbs().maxCoeff());
  const double residual = (matrix * x - rhs).cwiseAbs().maxCoeff();
  if (!std::isfinite(residual) || (scale > 0.0 && residual > 1e-7 * scale))
    throw singular_system_error(
        "linear solve produced an inaccurate solution at contact iteration " +
            std::to_string(iteration),
        iteration);
  return x;
}

}  // namespace tresca
