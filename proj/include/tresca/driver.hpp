#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tresca/adapt.hpp"
#include "tresca/config.hpp"
#include "tresca/contact.hpp"
#include "tresca/errors.hpp"
#include "tresca/estimator.hpp"
#include "tresca/vtk.hpp"

namespace tresca {

// Contact on the right side, clamped on the left, traction free elsewhere.
inline std::map<Side, BoundaryTag> default_tagging() {
  return {{Side::Left, BoundaryTag::Dirichlet},
          {Side::Right, BoundaryTag::Contact},
          {Side::Bottom, BoundaryTag::Neumann},
          {Side::Top, BoundaryTag::Neumann}};
}

inline Mesh load_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open mesh file '" + path + "'");
  return read_mesh(is);
}

inline Mesh initial_mesh(const RunConfig& config) {
  if (config.mesh_file) return load_mesh(*config.mesh_file);
  return build_unit_square_mesh(*config.cells_per_side, default_tagging());
}

inline ProblemSetup problem_setup(const RunConfig& config) {
  ProblemSetup setup;
  setup.material = make_material(config.E, config.nu);
  setup.body_force = [](const Vec2&) { return Vec2::Zero(); };
  const double g = config.g;
  setup.gap = [g](const Vec2&) { return g; };
  const double kappa = config.kappa;
  setup.friction_bound = [kappa](const Vec2&) { return kappa; };
  setup.alpha = config.alpha;
  setup.order = config.order;
  return setup;
}

struct SolveSummary {
  int dofs = 0;
  double h1 = 0.0;
  double eta = 0.0;
  double S = 0.0;
  int iterations = 0;
};

namespace detail {

inline void ensure_outdir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory '" + dir + "'");
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  return os;
}

}  // namespace detail

// Solve once on the configured mesh; write multiplier trace, indicator dump
// and a VTK file into the output directory.
inline SolveSummary run_solve(const RunConfig& config,
                              bool write_outputs = true) {
  const Mesh mesh = initial_mesh(config);
  const ProblemSetup setup = problem_setup(config);
  const FeSpace space(mesh, setup.order);
  const ContactProblem problem =
      make_contact_problem(mesh, space, setup.material, setup.body_force,
                           setup.gap, setup.friction_bound, setup.alpha);
  const FixedPointResult fixed = solve_fixed_point(problem, solver_config(config));
  const MultiplierField multipliers = recover_multipliers(problem, fixed.solution);
  const IndicatorSet indicators = total(problem, fixed.solution, multipliers);

  if (write_outputs) {
    detail::ensure_outdir(config.outdir);
    const std::filesystem::path out(config.outdir);
    {
      auto os = detail::open_output((out / "multipliers.csv").string());
      write_multiplier_trace(os, problem, multipliers);
    }
    {
      auto os = detail::open_output((out / "indicators.csv").string());
      write_indicator_dump(os, indicators);
    }
    export_vtk((out / "solution.vtk").string(), mesh, fixed.solution,
               multipliers);
  }

  SolveSummary summary;
  summary.dofs = space.total_dofs();
  summary.h1 = h1_norm(fixed.solution);
  summary.eta = indicators.eta_total();
  summary.S = indicators.S_total();
  summary.iterations = fixed.iterations;
  return summary;
}

struct UniformRow {
  double h = 0.0;
  int dofs = 0;
  double norm = 0.0;
  double eta = 0.0;
};

inline std::string format_uniform_row(const UniformRow& row) {
  std::ostringstream os;
  os << detail::format_double(row.h) << "," << row.dofs << ","
     << detail::format_double(row.norm) << "," << detail::format_double(row.eta)
     << "\n";
  return os.str();
}

// One solve per level on cells_per_side * 2^k grids (or successive uniform
// refinements of a mesh file). Rows are streamed so a failing level leaves
// the table truncated at the failure.
inline void run_uniform_rows(const RunConfig& config,
                             const std::function<void(const UniformRow&)>& emit) {
  const ProblemSetup setup = problem_setup(config);
  std::unique_ptr<Mesh> file_mesh;
  if (config.mesh_file)
    file_mesh = std::make_unique<Mesh>(load_mesh(*config.mesh_file));

  for (int level = 0; level < config.levels; ++level) {
    std::unique_ptr<Mesh> mesh;
    if (file_mesh) {
      mesh = std::make_unique<Mesh>(*file_mesh);
      for (int k = 0; k < level; ++k)
        mesh = std::make_unique<Mesh>(refine_all(*mesh));
    } else {
      mesh = std::make_unique<Mesh>(build_unit_square_mesh(
          *config.cells_per_side << level, default_tagging()));
    }
    const FeSpace space(*mesh, setup.order);
    const ContactProblem problem =
        make_contact_problem(*mesh, space, setup.material, setup.body_force,
                             setup.gap, setup.friction_bound, setup.alpha);
    const FixedPointResult fixed =
        solve_fixed_point(problem, solver_config(config));
    const MultiplierField multipliers =
        recover_multipliers(problem, fixed.solution);
    const IndicatorSet indicators = total(problem, fixed.solution, multipliers);

    UniformRow row;
    row.h = mesh_size(*mesh);
    row.dofs = space.total_dofs();
    row.norm = h1_norm(fixed.solution);
    row.eta = indicators.eta_total();
    emit(row);
  }
}

// CSV table "h,N,norm,eta"; partial output survives a solver failure.
inline void run_uniform(const RunConfig& config, std::ostream& os) {
  os << "h,N,norm,eta\n";
  run_uniform_rows(config, [&os](const UniformRow& row) {
    os << format_uniform_row(row);
    os.flush();
  });
}

// Adaptive loop plus final-mesh exports (history CSV, VTK, multiplier trace).
inline std::vector<AdaptiveRecord> run_adaptive(const RunConfig& config,
                                                std::ostream& history_os,
                                                bool write_outputs = true) {
  const Mesh mesh = initial_mesh(config);
  const ProblemSetup setup = problem_setup(config);
  AdaptiveResult result;
  try {
    result = adaptive_loop(mesh, setup, solver_config(config), config.theta,
                           config.dof_threshold);
  } catch (const adaptive_error& e) {
    write_adaptive_history(history_os, e.records);
    throw;
  }
  write_adaptive_history(history_os, result.records);

  if (write_outputs) {
    detail::ensure_outdir(config.outdir);
    const std::filesystem::path out(config.outdir);
    const FeSpace space(*result.final_mesh, setup.order);
    const ContactProblem problem = make_contact_problem(
        *result.final_mesh, space, setup.material, setup.body_force, setup.gap,
        setup.friction_bound, setup.alpha);
    DiscreteSolution solution{&space, result.final_coefficients};
    const MultiplierField multipliers = recover_multipliers(problem, solution);
    {
      auto os = detail::open_output((out / "multipliers.csv").string());
      write_multiplier_trace(os, problem, multipliers);
    }
    export_vtk((out / "solution.vtk").string(), *result.final_mesh, solution,
               multipliers);
  }
  return result.records;
}

// --- built-in verification checks -------------------------------------------

namespace verify {

inline double analytic_triangle_monomial(int a, int b) {
  // int_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!
  double num = 1.0;
  for (int k = 2; k <= a; ++k) num *= k;
  for (int k = 2; k <= b; ++k) num *= k;
  double den = 1.0;
  for (int k = 2; k <= a + b + 2; ++k) den *= k;
  return num / den;
}

inline bool quadrature_exactness() {
  for (int degree = 1; degree <= 6; ++degree) {
    const QuadratureRule rule = interior_quadrature(degree);
    for (int a = 0; a + 0 <= rule.degree; ++a)
      for (int b = 0; a + b <= rule.degree; ++b) {
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q)
          acc += rule.weights[q] * std::pow(rule.points[q].x(), a) *
                 std::pow(rule.points[q].y(), b);
        if (std::abs(acc - analytic_triangle_monomial(a, b)) > 1e-14)
          return false;
      }
    const SegmentRule seg = facet_quadrature(degree);
    for (int k = 0; k <= seg.degree; ++k) {
      double acc = 0.0;
      for (std::size_t q = 0; q < seg.points.size(); ++q)
        acc += seg.weights[q] * std::pow(seg.points[q], k);
      if (std::abs(acc - 1.0 / (k + 1)) > 1e-14) return false;
    }
  }
  return true;
}

inline bool patch_test(int order) {
  std::map<Side, BoundaryTag> tags{{Side::Left, BoundaryTag::Dirichlet},
                                   {Side::Right, BoundaryTag::Dirichlet},
                                   {Side::Bottom, BoundaryTag::Dirichlet},
                                   {Side::Top, BoundaryTag::Dirichlet}};
  Mesh mesh = build_unit_square_mesh(3, tags);
  mesh = refine(mesh, {0, 3, 5});  // break the structured symmetry
  const FeSpace space(mesh, order);
  const MaterialModel material = make_material(1.0, 0.3);

  auto exact = [](const Vec2& x) {
    return Vec2(0.02 + 0.13 * x.x() + 0.31 * x.y(),
                -0.05 + 0.21 * x.x() - 0.11 * x.y());
  };
  VecX values = VecX::Zero(space.total_dofs());
  for (int n = 0; n < space.num_scalar_nodes(); ++n) {
    const Vec2 u = exact(space.node_position(n));
    values[FeSpace::dof(n, 0)] = u.x();
    values[FeSpace::dof(n, 1)] = u.y();
  }

  const std::vector<Triplet> triplets = stiffness_triplets(space, material);
  VecX rhs = VecX::Zero(space.total_dofs());
  const SpMat system =
      assemble_constrained(space.total_dofs(), triplets, rhs,
                           space.dirichlet_dof_flags(), values);
  const VecX u = solve_spd(system, rhs);
  DiscreteSolution error{&space, u - values};
  return h1_norm(error) <= 1e-10;
}

inline bool rigid_body_kernel() {
  const Mesh mesh = build_unit_square_mesh(4, default_tagging());
  const FeSpace space(mesh, 2);
  const MaterialModel material = make_material(1.0, 0.3);
  const SpMat stiffness = assemble_stiffness(space, material);

  auto mode_energy = [&](const std::function<Vec2(const Vec2&)>& mode) {
    VecX c = VecX::Zero(space.total_dofs());
    for (int n = 0; n < space.num_scalar_nodes(); ++n) {
      const Vec2 u = mode(space.node_position(n));
      c[FeSpace::dof(n, 0)] = u.x();
      c[FeSpace::dof(n, 1)] = u.y();
    }
    return energy_norm_squared(stiffness, c) / std::max(1.0, c.squaredNorm());
  };

  const double e1 = mode_energy([](const Vec2&) { return Vec2(1.0, 0.0); });
  const double e2 = mode_energy([](const Vec2&) { return Vec2(0.0, 1.0); });
  const double e3 =
      mode_energy([](const Vec2& x) { return Vec2(-x.y(), x.x()); });
  const double scale = stiffness.coeffs().abs().maxCoeff();
  return e1 <= 1e-12 * scale && e2 <= 1e-12 * scale && e3 <= 1e-12 * scale;
}

inline bool clamp_invariants(const RunConfig& base) {
  RunConfig config = base;
  config.cells_per_side = 8;
  config.mesh_file.reset();
  const Mesh mesh = initial_mesh(config);
  const ProblemSetup setup = problem_setup(config);
  const FeSpace space(mesh, setup.order);
  const ContactProblem problem =
      make_contact_problem(mesh, space, setup.material, setup.body_force,
                           setup.gap, setup.friction_bound, setup.alpha);
  const FixedPointResult fixed =
      solve_fixed_point(problem, solver_config(config));
  const MultiplierField multipliers =
      recover_multipliers(problem, fixed.solution);
  for (std::size_t f = 0; f < multipliers.facets.size(); ++f)
    for (std::size_t q = 0; q < multipliers.facets[f].lambda_n.size(); ++q) {
      if (!(multipliers.facets[f].lambda_n[q] >= 0.0)) return false;
      if (!(std::abs(multipliers.facets[f].lambda_t[q]) <=
            problem.facets[f].kappa_q[q] + 1e-12))
        return false;
    }
  return true;
}

inline bool orientation_invariance() {
  Mesh mesh = build_unit_square_mesh(2, default_tagging());
  mesh = refine(mesh, {1, 4});
  const FeSpace space(mesh, 2);
  const ProblemSetup setup = problem_setup(RunConfig{});
  const ContactProblem problem =
      make_contact_problem(mesh, space, setup.material, setup.body_force,
                           setup.gap, setup.friction_bound, setup.alpha);

  DiscreteSolution u = zero_solution(space);
  for (int n = 0; n < space.num_scalar_nodes(); ++n) {
    const Vec2 x = space.node_position(n);
    u.coefficients[FeSpace::dof(n, 0)] = 0.3 * x.x() * x.x() - 0.1 * x.y();
    u.coefficients[FeSpace::dof(n, 1)] = 0.2 * x.x() * x.y();
  }

  for (const InteriorEdge& e : interior_edges(mesh)) {
    InteriorEdge flipped = e;
    std::swap(flipped.a, flipped.b);
    std::swap(flipped.left, flipped.right);
    flipped.normal = -e.normal;
    const double a = edge_jump(problem, u, e);
    const double b = edge_jump(problem, u, flipped);
    if (std::abs(a - b) > 1e-12 * std::max(1.0, a)) return false;
  }
  return true;
}

}  // namespace verify

// Machine-readable pass/fail report; returns overall success.
inline bool run_verify(const RunConfig& config, std::ostream& os) {
  bool ok = true;
  auto report = [&](const char* name, bool pass) {
    os << (pass ? "PASS " : "FAIL ") << name << "\n";
    ok = ok && pass;
  };
  report("quadrature-exactness", verify::quadrature_exactness());
  report("patch-test-order-1", verify::patch_test(1));
  report("patch-test-order-2", verify::patch_test(2));
  report("rigid-body-kernel", verify::rigid_body_kernel());
  report("clamp-invariants", verify::clamp_invariants(config));
  report("orientation-invariance", verify::orientation_invariance());
  return ok;
}

}  // namespace tresca
