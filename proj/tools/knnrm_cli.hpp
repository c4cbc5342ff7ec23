#pragma once

// Command-line front end. Kept in a header so the tests can drive it
// in-process.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "knnrm/knnrm.hpp"

namespace knnrm::cli {

inline constexpr const char* kOutputDirEnv = "KNNRM_OUTPUT_DIR";
inline constexpr const char* kManifestName = "manifest.json";

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"estimate", "sweep",   "bound",          "constants",
                                              "optimal",  "oracle", "precision-table"};
  return names;
}

/// Fully resolved parameters of one run.
struct RunManifest {
  std::string command;
  std::string code = "square1d";
  std::vector<double> x;
  double alpha = 0.95;
  double beta = 0.55;
  double gamma = 0.5;
  std::optional<double> epsilon;
  double theta0 = 0.3;
  std::size_t n = 1000;
  std::size_t reps = 100;
  std::uint64_t seed = 20170815;
  std::size_t grid_size = 11;
  double grid_lo = 0.05;
  double grid_hi = 0.95;
  std::string warmup = "skip";
  bool optimal = false;
  std::size_t d = 1;
  double eta_beta = 0.05;
  double eta_eps = 0.3;
  double radius = 0.01;
  std::size_t m = 100000;
  std::uint64_t draw_budget = kOracleDrawBudget;
  std::optional<double> c2;
  std::size_t threads = 0;
  std::string output_dir;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j{{"command", command},   {"code", code},         {"x", x},
                     {"alpha", alpha},       {"beta", beta},         {"gamma", gamma},
                     {"theta0", theta0},     {"n", n},               {"reps", reps},
                     {"seed", seed},         {"grid_size", grid_size}, {"grid_lo", grid_lo},
                     {"grid_hi", grid_hi},   {"warmup", warmup},     {"optimal", optimal},
                     {"d", d},               {"eta_beta", eta_beta}, {"eta_eps", eta_eps},
                     {"radius", radius},     {"m", m},               {"draw_budget", draw_budget},
                     {"threads", threads},   {"output_dir", output_dir}};
    j["epsilon"] = epsilon ? nlohmann::json(*epsilon) : nlohmann::json(nullptr);
    j["c2"] = c2 ? nlohmann::json(*c2) : nlohmann::json(nullptr);
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest r;
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key) && !j.at(key).is_null()) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("command", r.command);
    get("code", r.code);
    get("x", r.x);
    get("alpha", r.alpha);
    get("beta", r.beta);
    get("gamma", r.gamma);
    get("theta0", r.theta0);
    get("n", r.n);
    get("reps", r.reps);
    get("seed", r.seed);
    get("grid_size", r.grid_size);
    get("grid_lo", r.grid_lo);
    get("grid_hi", r.grid_hi);
    get("warmup", r.warmup);
    get("optimal", r.optimal);
    get("d", r.d);
    get("eta_beta", r.eta_beta);
    get("eta_eps", r.eta_eps);
    get("radius", r.radius);
    get("m", r.m);
    get("draw_budget", r.draw_budget);
    get("threads", r.threads);
    get("output_dir", r.output_dir);
    if (j.contains("epsilon") && !j.at("epsilon").is_null()) r.epsilon = j.at("epsilon").get<double>();
    if (j.contains("c2") && !j.at("c2").is_null()) r.c2 = j.at("c2").get<double>();
    return r;
  }
};

namespace detail {

inline std::vector<double> default_query(const CodeModel& code) {
  if (code.name == "square1d") return {0.5};
  return std::vector<double>(code.d, 0.0);
}

/// Fills defaults that depend on other fields (query point, optimal
/// parameters, epsilon) and checks every precondition.
inline void resolve(RunManifest& r) {
  const bool needs_code = r.command != "optimal" && r.command != "precision-table";
  if (needs_code) {
    const CodeModel code = code_by_name(r.code);
    if (r.x.empty()) r.x = default_query(code);
    knnrm::detail::require(r.x.size() == code.d, "--x must have " + std::to_string(code.d) +
                                                     " coordinate(s) for " + code.name);
    if (!code.in_support(r.x)) throw DomainError("--x lies outside the input support of " + code.name);
    r.d = code.d;
  }
  if (r.optimal) {
    const auto p = theory::optimal_params(r.d, r.eta_beta, r.eta_eps);
    r.beta = p.beta;
    r.gamma = p.gamma;
    r.epsilon = p.epsilon;
  }
  if (!r.epsilon && r.beta > 0.0 && r.beta < 1.0) r.epsilon = default_epsilon(r.beta);
  parse_warmup(r.warmup);
  if (r.command == "estimate" || r.command == "bound" || r.command == "constants") {
    ParamConfig c;
    c.alpha = r.alpha;
    c.beta = r.beta;
    c.gamma = r.gamma;
    c.epsilon = r.epsilon.value_or(0.0);
    c.theta0 = r.theta0;
    c.query = r.x;
    c.validate();
  }
  if (r.command == "estimate" || r.command == "bound" || r.command == "sweep") {
    knnrm::detail::require(r.n >= 1, "n >= 1 violated");
  }
  if (r.command == "sweep") {
    knnrm::detail::require(r.grid_size >= 1, "grid-size >= 1 violated");
    knnrm::detail::require(r.grid_lo > 0.0 && r.grid_hi < 1.0 && r.grid_lo <= r.grid_hi,
                           "0 < grid-lo <= grid-hi < 1 violated");
    knnrm::detail::require(r.reps >= 1, "reps >= 1 violated");
  }
  if (r.command == "oracle") {
    knnrm::detail::require(r.radius > 0.0, "radius > 0 violated");
    knnrm::detail::require(r.m >= 1, "m >= 1 violated");
    knnrm::detail::require(r.alpha >= 0.5 && r.alpha < 1.0, "1/2 <= alpha < 1 violated");
  }
  if (r.command == "precision-table") knnrm::detail::require(r.n >= 1, "n >= 1 violated");
  if (r.c2) knnrm::detail::require(*r.c2 > 0.0, "c2 > 0 violated");
}

inline ParamConfig param_config(const RunManifest& r) {
  ParamConfig c;
  c.alpha = r.alpha;
  c.beta = r.beta;
  c.gamma = r.gamma;
  c.epsilon = r.epsilon.value_or(default_epsilon(r.beta));
  c.theta0 = r.theta0;
  c.query = r.x;
  c.warmup = parse_warmup(r.warmup);
  return c;
}

inline ExperimentSpec experiment_spec(const RunManifest& r) {
  ExperimentSpec s;
  s.code = r.code;
  s.x = r.x;
  s.alpha = r.alpha;
  s.n = r.n;
  s.reps = r.reps;
  s.seed = r.seed;
  s.theta0 = r.theta0;
  s.warmup = parse_warmup(r.warmup);
  s.threads = r.threads;
  return s;
}

inline std::filesystem::path output_path(const RunManifest& r, const std::string& file) {
  return std::filesystem::path(r.output_dir) / file;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

inline std::vector<std::size_t> bound_grid(std::int64_t n0, std::size_t n) {
  std::vector<std::size_t> ns;
  const auto first = static_cast<std::size_t>(n0 + 1);
  if (n < first) return ns;
  if (n - first < 5000) {
    for (std::size_t k = first; k <= n; ++k) ns.push_back(k);
    return ns;
  }
  const double a = std::log(static_cast<double>(first));
  const double b = std::log(static_cast<double>(n));
  for (int i = 0; i < 200; ++i) {
    ns.push_back(static_cast<std::size_t>(std::llround(std::exp(a + (b - a) * i / 199.0))));
  }
  ns.front() = first;
  ns.back() = n;
  return ns;
}

}  // namespace detail

/// Runs one resolved manifest. Returns the process exit status.
inline int dispatch(RunManifest r, std::ostream& out, std::ostream& err) {
  try {
    detail::resolve(r);
    if (r.output_dir.empty()) {
      const char* env = std::getenv(kOutputDirEnv);
      r.output_dir = env != nullptr && *env != '\0' ? env : ".";
    }
    if (!std::filesystem::is_directory(r.output_dir)) {
      throw ConfigError("output directory does not exist: " + r.output_dir);
    }
    std::ostringstream manifest;
    manifest << r.to_json().dump(2) << '\n';
    detail::write_file(detail::output_path(r, kManifestName), manifest.str());

    if (r.command == "estimate") {
      const CodeModel code = code_by_name(r.code);
      const ParamConfig config = detail::param_config(r);
      Rng rng = make_stream(r.seed, 0);
      const auto trajectory = run_estimator(
          [&](Observation& o) {
            sample(code, rng, o);
            return true;
          },
          config, r.n);
      std::ostringstream csv;
      report::write_trajectory_csv(csv, trajectory);
      detail::write_file(detail::output_path(r, "trajectory.csv"), csv.str());
      out << "theta_n=" << report::fmt(trajectory.back())
          << " target=" << report::fmt(true_conditional_quantile(code, r.x, r.alpha)) << '\n';
    } else if (r.command == "sweep") {
      ExperimentSpec spec = detail::experiment_spec(r);
      spec.grid = square_grid(r.grid_size, r.grid_lo, r.grid_hi);
      const ExperimentResult result = sweep(spec);
      std::ostringstream csv, svg;
      report::write_sweep_csv(csv, result);
      report::write_heatmap_svg(svg, result, r.code + " mse, n=" + std::to_string(r.n));
      detail::write_file(detail::output_path(r, "sweep.csv"), csv.str());
      detail::write_file(detail::output_path(r, "sweep.svg"), svg.str());
      const auto& best = result.cells[argmin_cell(result)];
      out << "argmin beta=" << report::fmt(best.beta) << " gamma=" << report::fmt(best.gamma)
          << " mse=" << report::fmt(best.mse) << '\n';
    } else if (r.command == "bound" || r.command == "constants") {
      const CodeModel code = code_by_name(r.code);
      const ParamConfig config = detail::param_config(r);
      theory::ModelConstants model = theory::model_constants(code);
      model.C2_override = r.c2;
      const theory::ConstantsLedger ledger = theory::constants_ledger(model, config);
      if (r.command == "constants") {
        std::ostringstream csv;
        report::write_ledger_csv(csv, ledger);
        detail::write_file(detail::output_path(r, "constants.csv"), csv.str());
        out << csv.str();
      } else {
        if (static_cast<std::int64_t>(r.n) <= ledger.N0) {
          throw ConfigError("n >= N0 + 1 violated (n = " + std::to_string(r.n) +
                            ", N0 = " + std::to_string(ledger.N0) + ")");
        }
        const auto curve = theory::bound_curve(ledger, config, detail::bound_grid(ledger.N0, r.n));
        std::ostringstream csv;
        report::write_bound_csv(csv, curve);
        detail::write_file(detail::output_path(r, "bound.csv"), csv.str());
        out << "bound(n=" << r.n << ")=" << report::fmt(curve.bound_values.back()) << '\n';
      }
    } else if (r.command == "optimal") {
      const auto p = theory::optimal_params(r.d, r.eta_beta, r.eta_eps);
      std::ostringstream line;
      line << "gamma=" << report::fmt(p.gamma) << ",beta=" << report::fmt(p.beta)
           << ",epsilon=" << report::fmt(p.epsilon) << ",exponent=" << report::fmt(p.exponent) << '\n';
      detail::write_file(detail::output_path(r, "optimal.txt"), line.str());
      out << line.str();
    } else if (r.command == "oracle") {
      const CodeModel code = code_by_name(r.code);
      Rng rng = make_stream(r.seed, 0);
      const double q = empirical_quantile_oracle(code, r.x, r.alpha, r.radius, r.m, rng, r.draw_budget);
      detail::write_file(detail::output_path(r, "oracle.txt"), report::fmt(q) + '\n');
      out << report::fmt(q) << '\n';
    } else if (r.command == "precision-table") {
      std::vector<report::PrecisionRow> rows;
      for (double eta : {0.3, 0.0}) {
        for (std::size_t d = 1; d <= 3; ++d) rows.push_back({d, eta, r.n, theory::expected_precision(d, eta, r.n)});
      }
      std::ostringstream csv;
      report::write_precision_csv(csv, rows);
      detail::write_file(detail::output_path(r, "precision_table.csv"), csv.str());
      out << csv.str();
    } else {
      throw ConfigError("unknown command '" + r.command + "'");
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"kNN-localized Robbins-Monro conditional quantile toolkit", "knnrm"};
  app.require_subcommand(0, 1);
  RunManifest m;
  std::string manifest_path;
  std::string out_dir;
  app.add_option("--manifest", manifest_path, "Re-run the parameters recorded in a manifest.json");
  app.add_option("--out", out_dir, std::string("Output directory (default: $") + kOutputDirEnv + " or .)");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--threads", m.threads, "Worker threads (0: hardware)");
  };
  auto add_code = [&](CLI::App* sub) {
    sub->add_option("--code", m.code, "square1d, abs1d, norm2d, mixed2d, norm3d or mixed3d");
    sub->add_option("--x", m.x, "Query point, comma separated")->delimiter(',');
    sub->add_option("--alpha", m.alpha, "Quantile level in [1/2, 1)");
  };
  auto add_params = [&](CLI::App* sub) {
    sub->add_option("--beta", m.beta, "Neighbour exponent, k_n = floor(n^beta)");
    sub->add_option("--gamma", m.gamma, "Step exponent, gamma_n = n^-gamma");
    sub->add_option("--epsilon", m.epsilon, "Truncation exponent (default 1 - beta + 0.3)");
    sub->add_flag("--optimal", m.optimal, "Use gamma = 1/(1+d), beta = gamma + eta_beta, epsilon = 1 - beta + eta_eps");
    sub->add_option("--eta-beta", m.eta_beta, "Gap beta - gamma for --optimal");
    sub->add_option("--eta-eps", m.eta_eps, "Gap epsilon - (1 - beta) for --optimal");
  };
  auto add_run = [&](CLI::App* sub) {
    sub->add_option("--theta0", m.theta0, "Initial estimate");
    sub->add_option("--n", m.n, "Horizon");
    sub->add_option("--seed", m.seed, "64-bit seed");
    sub->add_option("--warmup", m.warmup, "skip or accept: rule for draws before k prior points exist");
  };

  auto* estimate = app.add_subcommand("estimate", "Run one trajectory; writes trajectory.csv");
  add_common(estimate);
  add_code(estimate);
  add_params(estimate);
  add_run(estimate);

  auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo mse over a (beta, gamma) grid; writes sweep.csv, sweep.svg");
  add_common(sweep_cmd);
  add_code(sweep_cmd);
  add_run(sweep_cmd);
  sweep_cmd->add_option("--reps", m.reps, "Replications per cell");
  sweep_cmd->add_option("--grid-size", m.grid_size, "Points per axis");
  sweep_cmd->add_option("--grid-lo", m.grid_lo, "Smallest beta and gamma");
  sweep_cmd->add_option("--grid-hi", m.grid_hi, "Largest beta and gamma");

  auto* bound = app.add_subcommand("bound", "Mean square error bound curve; writes bound.csv");
  add_common(bound);
  add_code(bound);
  add_params(bound);
  bound->add_option("--n", m.n, "Largest n");
  bound->add_option("--c2", m.c2, "Override the contraction constant C2");

  auto* constants = app.add_subcommand("constants", "Constants ledger; writes constants.csv");
  add_common(constants);
  add_code(constants);
  add_params(constants);
  constants->add_option("--c2", m.c2, "Override the contraction constant C2");

  auto* optimal = app.add_subcommand("optimal", "Rate-optimal (gamma, beta, epsilon) for dimension d");
  add_common(optimal);
  optimal->add_option("--d", m.d, "Input dimension");
  optimal->add_option("--eta-beta", m.eta_beta, "Gap beta - gamma");
  optimal->add_option("--eta-eps", m.eta_eps, "Gap epsilon - (1 - beta)");

  auto* oracle = app.add_subcommand("oracle", "Brute-force conditional quantile from draws near x");
  add_common(oracle);
  add_code(oracle);
  oracle->add_option("--radius", m.radius, "Ball radius around x");
  oracle->add_option("--m", m.m, "Accepted draws");
  oracle->add_option("--seed", m.seed, "64-bit seed");
  oracle->add_option("--draw-budget", m.draw_budget, "Raw draw budget");

  auto* precision = app.add_subcommand("precision-table", "Forecast precision for d = 1..3; writes precision_table.csv");
  add_common(precision);
  precision->add_option("--n", m.n, "Budget of code calls");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  if (!manifest_path.empty()) {
    std::ifstream f(manifest_path);
    if (!f) {
      err << "error: cannot read manifest " << manifest_path << '\n';
      return 2;
    }
    try {
      m = RunManifest::from_json(nlohmann::json::parse(f));
    } catch (const std::exception& e) {
      err << "error: malformed manifest: " << e.what() << '\n';
      return 2;
    }
  } else {
    const auto subs = app.get_subcommands();
    if (subs.empty()) {
      err << "error: a command is required (" << "estimate, sweep, bound, constants, optimal, oracle, precision-table)\n";
      return 2;
    }
    m.command = subs.front()->get_name();
  }
  m.output_dir = out_dir.empty() ? (manifest_path.empty() ? std::string() : m.output_dir) : out_dir;
  return dispatch(std::move(m), out, err);
}

}  // namespace knnrm::cli
