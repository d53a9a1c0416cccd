// Command line front end: solve | uniform | adapt | verify | export.
//
// Exit codes: 0 success, 1 configuration or parse error, 2 solver
// non-convergence, 3 I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "tresca/tresca.hpp"

namespace {

constexpr const char* kUsage = R"(usage: tresca <subcommand> [options]

subcommands:
  solve     solve once on the configured mesh and export the solution
  uniform   solve on a sequence of uniformly refined meshes, emit h,N,norm,eta
  adapt     run the adaptive solve-estimate-mark-refine loop
  verify    run the built-in verification suite
  export    solve once and write only the VTK solution file

options:
  --config <path>    read key=value configuration from a file
  --out <dir>        output directory (same as --outdir <dir>)
  --<key> <value>    override any configuration key, e.g. --cells_per_side 8
)";

tresca::RunConfig parse_command_line(const std::vector<std::string>& args) {
  tresca::RunConfig config;
  // First pass: the config file, so command line overrides win.
  for (std::size_t i = 0; i < args.size(); i += 2) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw std::invalid_argument("missing value for --config");
      std::ifstream is(args[i + 1]);
      if (!is)
        throw std::invalid_argument("cannot open config file '" + args[i + 1] +
                                    "'");
      config = tresca::parse_config(is, config);
    }
  }
  for (std::size_t i = 0; i < args.size(); i += 2) {
    const std::string& flag = args[i];
    if (flag.rfind("--", 0) != 0)
      throw std::invalid_argument("unexpected argument '" + flag + "'");
    if (i + 1 >= args.size())
      throw std::invalid_argument("missing value for " + flag);
    const std::string key = flag.substr(2);
    if (key == "config") continue;
    if (key == "out") {
      config.outdir = args[i + 1];
      continue;
    }
    tresca::apply_config_key(config, key, args[i + 1]);
  }
  return config;
}

int dispatch(const std::string& command, tresca::RunConfig& config) {
  namespace fs = std::filesystem;
  if (command == "uniform" || command == "adapt")
    config.mode = command == "adapt" ? "adaptive" : "uniform";
  if (command == "verify") config.mode = "verify";
  tresca::validate_config(config);

  if (command == "solve") {
    const tresca::SolveSummary s = tresca::run_solve(config);
    std::cout << "N=" << s.dofs << " norm=" << tresca::detail::format_double(s.h1)
              << " eta=" << tresca::detail::format_double(s.eta)
              << " S=" << tresca::detail::format_double(s.S)
              << " iterations=" << s.iterations << "\n";
    return 0;
  }
  if (command == "uniform") {
    tresca::detail::ensure_outdir(config.outdir);
    auto os = tresca::detail::open_output(
        (fs::path(config.outdir) / "uniform.csv").string());
    try {
      tresca::run_uniform(config, os);
    } catch (...) {
      os.flush();
      throw;
    }
    std::ifstream echo((fs::path(config.outdir) / "uniform.csv").string());
    std::cout << echo.rdbuf();
    return 0;
  }
  if (command == "adapt") {
    tresca::detail::ensure_outdir(config.outdir);
    auto os = tresca::detail::open_output(
        (fs::path(config.outdir) / "history.csv").string());
    tresca::run_adaptive(config, os);
    os.flush();
    std::ifstream echo((fs::path(config.outdir) / "history.csv").string());
    std::cout << echo.rdbuf();
    return 0;
  }
  if (command == "verify") {
    return tresca::run_verify(config, std::cout) ? 0 : 1;
  }
  if (command == "export") {
    const tresca::Mesh mesh = tresca::initial_mesh(config);
    const tresca::ProblemSetup setup = tresca::problem_setup(config);
    const tresca::FeSpace space(mesh, setup.order);
    const tresca::ContactProblem problem = tresca::make_contact_problem(
        mesh, space, setup.material, setup.body_force, setup.gap,
        setup.friction_bound, setup.alpha);
    const tresca::FixedPointResult fixed =
        tresca::solve_fixed_point(problem, tresca::solver_config(config));
    const tresca::MultiplierField multipliers =
        tresca::recover_multipliers(problem, fixed.solution);
    tresca::detail::ensure_outdir(config.outdir);
    const std::string path = (fs::path(config.outdir) / "solution.vtk").string();
    tresca::export_vtk(path, mesh, fixed.solution, multipliers);
    std::cout << path << "\n";
    return 0;
  }
  throw std::invalid_argument("unknown subcommand '" + command + "'");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << kUsage;
    return 1;
  }
  const std::string command = argv[1];
  if (command == "--help" || command == "-h" || command == "help") {
    std::cout << kUsage;
    return 0;
  }
  try {
    tresca::RunConfig config =
        parse_command_line(std::vector<std::string>(argv + 2, argv + argc));
    return dispatch(command, config);
  } catch (const tresca::nonconvergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tresca::adaptive_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tresca::singular_system_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tresca::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
