#include "field_econ/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "field_econ/core.hpp"
#include "field_econ/dynamics.hpp"
#include "field_econ/field_solver.hpp"
#include "field_econ/harness.hpp"
#include "field_econ/io.hpp"
#include "field_econ/kernels.hpp"

namespace field_econ {

namespace {

namespace fs = std::filesystem;

constexpr const char* kSchemaHelp = R"(Config file: one flat JSON object.
Model keys (all required, numbers):
  A > 0, A_bar > 0 with A_bar/A >= 10, alpha, gamma, delta, kappa in (0,1),
  d in (0,2], sigma > 0, sigma_X >= 0, vartheta > 0,
  kappa0, kappa1, kappa2, chi1, chi2, alpha_laplace >= 0, theta_horizon > 0.
Optional model key: interaction_normalization = "sum" | "mean".
Run keys (optional): n_agents, n_steps, seed, stride, init ("constant" |
  "field_mean"), initial_capital, initial_log_spread, initial_x_range,
  mean_capital ("analytic" | "empirical"), rho_variant ("simple" |
  "main_text" | "appendix"), price_tol, price_max_iter.
Validation keys (optional): n_seeds, base_seed, threads_outer, d_alt,
  check_d_ordering, cohort_high, cohort_low, gap_threshold,
  matched_kappa1, matched_kappa2, spearman_threshold, slope_tolerance.
)";

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<long> stride;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file")->required();
  app->add_option("--out", c.out, "output directory");
  app->add_option("--seed", c.seed, "master seed (overrides config)");
  app->add_option("--threads", c.threads, "worker threads (overrides FIELD_ECON_THREADS)")
      ->check(CLI::PositiveNumber);
  app->add_option("--stride", c.stride, "snapshot stride (overrides config)")
      ->check(CLI::PositiveNumber);
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Loaded {
  nlohmann::json raw;
  ModelParams params;
};

Loaded load(const Common& c) {
  Loaded l;
  try {
    l.raw = load_json_file(c.config);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!l.raw.is_object()) throw ConfigError("config must be a JSON object");
  const ValidatedParams v = validate_params(l.raw);
  for (const std::string& w : v.warnings) std::cerr << "warning: " << w << '\n';
  l.params = v.params;
  return l;
}

SimConfig sim_config(const Common& c, const nlohmann::json& raw) {
  SimConfig s = sim_config_from_json(raw);
  if (c.seed) s.seed = *c.seed;
  if (c.stride) s.stride = *c.stride;
  s.threads = resolve_threads(c.threads);
  return s;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

int run_simulate(const Common& c) {
  const Loaded l = load(c);
  const SimConfig cfg = sim_config(c, l.raw);
  const Trajectory traj = simulate(l.params, cfg);
  fs::create_directories(c.out);
  {
    std::ofstream os(fs::path(c.out) / "trajectory.csv");
    write_trajectory_csv(traj, os);
  }
  write_json(fs::path(c.out) / "summary.json", trajectory_summary(traj));
  std::cout << "simulated " << cfg.n_agents << " agents for " << cfg.n_steps << " steps -> "
            << c.out << '\n';
  return 0;
}

int run_solve(const Common& c, const std::string& variant, bool grids) {
  const Loaded l = load(c);
  RhoVariant v = sim_config_from_json(l.raw).rho_variant;
  if (!variant.empty()) v = parse_rho_variant(variant);
  const FieldSolution f = solve_field(l.params, v);
  fs::create_directories(c.out);
  write_json(fs::path(c.out) / "solution.json", field_to_json(f));
  if (grids) write_field_grids(f, (fs::path(c.out) / "grids").string());
  std::cout << "phase " << (f.phase.nontrivial() ? "non-trivial" : "trivial")
            << ", discriminant " << format_double(f.phase.discriminant) << " -> " << c.out
            << '\n';
  return 0;
}

int run_kernel(const Common& c, const std::string& queries) {
  const Loaded l = load(c);
  const RhoVariant v = sim_config_from_json(l.raw).rho_variant;
  const FieldSolution f = solve_field(l.params, v);
  std::ifstream is(queries);
  if (!is) throw std::runtime_error("cannot open " + queries);
  const std::vector<KernelQuery> q = read_queries_csv(is);
  std::vector<TransitionValue> vals;
  vals.reserve(q.size());
  for (const KernelQuery& k : q) vals.push_back(transition(k, l.params, f));
  fs::create_directories(c.out);
  std::ofstream os(fs::path(c.out) / "kernel.csv");
  write_kernel_csv(q, vals, os);
  std::cout << "evaluated " << q.size() << " queries -> " << c.out << '\n';
  return 0;
}

SweepAxis parse_axis(const std::string& spec) {
  // name=start:stop:num
  const auto eq = spec.find('=');
  const auto c1 = spec.find(':', eq == std::string::npos ? 0 : eq);
  const auto c2 = c1 == std::string::npos ? std::string::npos : spec.find(':', c1 + 1);
  if (eq == std::string::npos || c1 == std::string::npos || c2 == std::string::npos) {
    throw CLI::ValidationError("--axis", "expected name=start:stop:num, got '" + spec + "'");
  }
  SweepAxis a;
  a.name = spec.substr(0, eq);
  ModelParams probe;
  try {
    get_param(probe, a.name);
  } catch (const std::out_of_range&) {
    throw CLI::ValidationError("--axis", "unknown parameter '" + a.name + "'");
  }
  try {
    const double start = std::stod(spec.substr(eq + 1, c1 - eq - 1));
    const double stop = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    const int num = std::stoi(spec.substr(c2 + 1));
    a.values = linspace(start, stop, num);
  } catch (const std::logic_error&) {
    throw CLI::ValidationError("--axis", "bad numbers in '" + spec + "'");
  }
  return a;
}

int run_phase_diagram(const Common& c, const std::vector<std::string>& axis_specs,
                      bool refined) {
  const Loaded l = load(c);
  std::vector<SweepAxis> axes;
  for (const std::string& s : axis_specs) axes.push_back(parse_axis(s));
  const SweepGrid g = phase_diagram(axes, l.params, refined);
  fs::create_directories(c.out);
  std::ofstream os(fs::path(c.out) / "sweep.csv");
  write_sweep_csv(g, os);
  std::size_t nb = 0;
  for (const SweepCell& cell : g.cells) nb += cell.boundary ? 1 : 0;
  std::cout << g.cells.size() << " cells, " << nb << " on the phase boundary -> " << c.out
            << '\n';
  return 0;
}

int run_validate(const Common& c, const std::string& phase) {
  const Loaded l = load(c);
  McConfig mc = mc_config_from_json(l.raw);
  if (c.seed) mc.base_seed = *c.seed;
  mc.sim.threads = resolve_threads(c.threads);
  bool phase2 = false;
  if (phase == "auto") {
    phase2 = solve_field(l.params, mc.sim.rho_variant).phase.nontrivial();
  } else {
    phase2 = phase == "2";
  }
  const ValidationReport rep = phase2 ? validate_phase2(l.params, mc) : validate_phase1(l.params, mc);
  fs::create_directories(c.out);
  write_json(fs::path(c.out) / "report.json", rep.to_json());
  for (const CheckRecord& ck : rep.checks) {
    std::cout << (ck.reported_only ? "INFO" : (ck.passed ? "PASS" : "FAIL")) << ' ' << ck.name
              << " predicted=" << format_double(ck.predicted)
              << " observed=" << format_double(ck.observed) << '\n';
  }
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Capital accumulation in an exchange space: simulator and field-theory solver"};
  app.footer(kSchemaHelp);
  app.require_subcommand(1);

  Common sim_c, solve_c, kern_c, pd_c, val_c;
  auto* sim = app.add_subcommand("simulate", "run the N-agent dynamics");
  add_common(sim, sim_c);

  auto* solve = app.add_subcommand("solve", "evaluate the closed-form field solution");
  add_common(solve, solve_c);
  std::string variant;
  bool no_grids = false;
  solve->add_option("--variant", variant, "rho^2 variant: simple|main_text|appendix");
  solve->add_flag("--no-grids", no_grids, "skip the grid CSVs");

  auto* kern = app.add_subcommand("kernel", "evaluate transition densities for a query CSV");
  add_common(kern, kern_c);
  std::string queries;
  kern->add_option("--queries", queries, "CSV with K,K_prime,X,X_prime,theta,theta_prime")
      ->required();

  auto* pd = app.add_subcommand("phase-diagram", "sweep parameters and classify phases");
  add_common(pd, pd_c);
  std::vector<std::string> axes;
  bool refined = false;
  pd->add_option("--axis", axes, "name=start:stop:num (repeatable)");
  pd->add_flag("--refined", refined, "use the full discriminant instead of the simple one");

  auto* val = app.add_subcommand("validate", "Monte Carlo versus theory checks");
  add_common(val, val_c);
  std::string phase = "auto";
  val->add_option("--phase", phase, "auto|1|2")->check(CLI::IsMember({"auto", "1", "2"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return run_simulate(sim_c);
    if (*solve) return run_solve(solve_c, variant, !no_grids);
    if (*kern) return run_kernel(kern_c, queries);
    if (*pd) return run_phase_diagram(pd_c, axes, refined);
    if (*val) return run_validate(val_c, phase);
  } catch (const ParamError& e) {
    std::cerr << "config error:\n";
    for (const ParamIssue& is : e.issues()) std::cerr << "  " << is.describe() << '\n';
    std::cerr << '\n' << kSchemaHelp;
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace field_econ
