#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tresca/contact.hpp"
#include "tresca/estimator.hpp"
#include "tresca/mesh.hpp"

namespace tresca {

struct AdaptiveRecord {
  int level = 0;
  int dofs = 0;
  double h1 = 0.0;
  double eta = 0.0;
  double S = 0.0;
  int iterations = 0;
};

struct adaptive_error : std::runtime_error {
  std::vector<AdaptiveRecord> records;
  adaptive_error(const std::string& what, std::vector<AdaptiveRecord> r)
      : std::runtime_error(what), records(std::move(r)) {}
};

// Doerfler bulk marking: the smallest set of triangles, by descending
// attributed indicator, whose squares sum to theta times the total square.
// Ties break toward the lower triangle index.
inline std::vector<int> mark(const IndicatorSet& indicators, double theta) {
  if (!(theta > 0.0 && theta <= 1.0))
    throw std::invalid_argument("mark: theta must lie in (0, 1]");
  const std::vector<double> elem2 = indicators.element_attribution();
  if (elem2.empty()) throw std::invalid_argument("mark: empty indicator set");

  std::vector<int> order(elem2.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&elem2](int a, int b) {
    if (elem2[a] != elem2[b]) return elem2[a] > elem2[b];
    return a < b;
  });

  double total2 = 0.0;
  for (double v : elem2) total2 += v;
  const double target = theta * total2;

  std::vector<int> marked;
  double acc = 0.0;
  for (int t : order) {
    if (elem2[t] <= 0.0) break;
    if (acc >= target && !marked.empty()) break;
    marked.push_back(t);
    acc += elem2[t];
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

// Problem data that survive re-meshing.
struct ProblemSetup {
  MaterialModel material;
  std::function<Vec2(const Vec2&)> body_force;
  std::function<double(const Vec2&)> gap;
  std::function<double(const Vec2&)> friction_bound;
  double alpha = 1e-3;
  int order = 2;
};

struct AdaptiveResult {
  std::vector<AdaptiveRecord> records;
  std::unique_ptr<Mesh> final_mesh;
  VecX final_coefficients;
};

// Solve -> estimate -> mark -> refine until the dof count reaches the
// threshold. The space and all assemblies are rebuilt on every level.
inline AdaptiveResult adaptive_loop(const Mesh& initial_mesh,
                                    const ProblemSetup& setup,
                                    const SolverConfig& solver, double theta,
                                    int dof_threshold) {
  {
    const FeSpace probe(initial_mesh, setup.order);
    if (dof_threshold <= probe.total_dofs())
      throw std::invalid_argument(
          "adaptive_loop: dof threshold must exceed the initial dof count");
  }

  AdaptiveResult result;
  auto mesh = std::make_unique<Mesh>(initial_mesh);
  for (int level = 0;; ++level) {
    const FeSpace space(*mesh, setup.order);
    const ContactProblem problem =
        make_contact_problem(*mesh, space, setup.material, setup.body_force,
                             setup.gap, setup.friction_bound, setup.alpha);
    FixedPointResult fixed;
    try {
      fixed = solve_fixed_point(problem, solver);
    } catch (const nonconvergence_error& e) {
      throw adaptive_error(std::string("adaptive level ") +
                               std::to_string(level) + ": " + e.what(),
                           result.records);
    } catch (const singular_system_error& e) {
      throw adaptive_error(std::string("adaptive level ") +
                               std::to_string(level) + ": " + e.what(),
                           result.records);
    }
    const MultiplierField multipliers =
        recover_multipliers(problem, fixed.solution);
    const IndicatorSet indicators = total(problem, fixed.solution, multipliers);

    AdaptiveRecord rec;
    rec.level = level;
    rec.dofs = space.total_dofs();
    rec.h1 = h1_norm(fixed.solution);
    rec.eta = indicators.eta_total();
    rec.S = indicators.S_total();
    rec.iterations = fixed.iterations;
    result.records.push_back(rec);

    if (rec.dofs >= dof_threshold) {
      result.final_mesh = std::move(mesh);
      result.final_coefficients = fixed.solution.coefficients;
      return result;
    }

    const std::vector<int> marked = mark(indicators, theta);
    mesh = std::make_unique<Mesh>(refine(*mesh, marked));
  }
}

// CSV history "level,N,norm,eta,S,iterations".
inline void write_adaptive_history(std::ostream& os,
                                   const std::vector<AdaptiveRecord>& records) {
  os << "level,N,norm,eta,S,iterations\n";
  for (const auto& r : records)
    os << r.level << "," << r.dofs << "," << detail::format_double(r.h1) << ","
       << detail::format_double(r.eta) << "," << detail::format_double(r.S)
       << "," << r.iterations << "\n";
}

}  // namespace tresca
