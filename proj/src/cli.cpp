#include "condenser/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/opensslv.h>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "condenser/experiments.hpp"
#include "condenser/verify.hpp"

#ifndef CONDENSER_VERSION
#define CONDENSER_VERSION "0.0.0"
#endif

namespace condenser::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SolverDiverged:
    case ErrorCode::SingularPair:
    case ErrorCode::CloudMismatch: return kSolver;
    default: return kConfig;
  }
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

struct Common {
  std::string config;
  std::string manifest;
  std::string out;
  std::int64_t seed = -1;
};

void add_common(CLI::App* sub, Common& c, bool needs_config) {
  auto* opt = sub->add_option("--config", c.config, "TOML run config")->check(CLI::ExistingFile);
  if (needs_config) opt->required();
  sub->add_option("--out", c.out, "output directory (overrides [output] directory)");
  sub->add_option("--seed", c.seed, "seed (overrides the config seed)")->check(CLI::NonNegativeNumber);
}

RunConfig config_from(const Common& c) {
  RunConfig cfg;
  if (!c.manifest.empty()) {
    json m;
    try {
      m = json::parse(slurp(c.manifest));
      cfg = parse_config(m.at("config").get<std::string>(), m.at("base_dir").get<std::string>());
      cfg.seed = m.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, c.manifest + ": " + e.what());
    }
  } else {
    cfg = load_config(c.config);
  }
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  return cfg;
}

fs::path out_dir(const Common& c, const RunConfig& cfg) {
  if (!c.out.empty()) return c.out;
  fs::path d = cfg.out_dir;
  return d.is_absolute() ? d : cfg.base_dir / d;
}

bool wants(const RunConfig& cfg, const std::string& fmt) {
  return std::find(cfg.formats.begin(), cfg.formats.end(), fmt) != cfg.formats.end();
}

json solution_scalars(const Solution& s) {
  return json{{"method", s.method},
              {"objective_riesz", s.objective_riesz},
              {"objective_green", s.objective_green},
              {"objective_gap", s.objective_gap},
              {"bridge_gap", s.bridge_gap},
              {"multiplier_c", s.multiplier_c},
              {"kkt_residual", s.kkt_residual},
              {"iterations", s.iterations},
              {"plus_mass", s.lambda.plus.mass()},
              {"minus_mass", s.lambda.minus.mass()}};
}

// Runs the diagnostics enabled in the config; returns true iff all of them pass.
bool run_diagnostics(const RunConfig& cfg, const Problem& p, const Solution& s, json& out, bool quiet) {
  bool pass = true;
  if (cfg.frostman) {
    FrostmanReport fr = frostman_diagnostics(s, p, cfg.threshold);
    out["frostman"] = fr;
    pass &= fr.pass;
    if (!quiet)
      std::printf("frostman  c=%.6g b1=%.3e b2=%.3e a2=%.3e  %s\n", fr.c, fr.maxviol_b1, fr.maxviol_b2, fr.maxviol_a2,
                  fr.pass ? "PASS" : "FAIL");
  }
  if (cfg.zone) {
    if (p.field.is_zero()) {
      ZoneOptions zo;
      zo.probes = cfg.probes;
      zo.seed = cfg.seed + 1;
      zo.global_tol = cfg.threshold;
      zo.a2_tol = cfg.threshold;
      ZoneReport zr = zone_diagnostics(s, p, zo);
      out["zone"] = zr;
      pass &= zr.pass;
      if (!quiet)
        std::printf("zone      probe_max=%.4f a2_probe_max=%.4f support=%.4f  %s\n", zr.probe_max_ratio,
                    zr.a2_probe_max_ratio, zr.support_fraction, zr.pass ? "PASS" : "FAIL");
    } else {
      out["zone"] = json{{"skipped", "the zone checks need a zero field"}};
    }
  }
  if (cfg.support) {
    SupportReport sr = support_diagnostics(s, p);
    out["support"] = sr;
    // Only the alpha = 2 boundary concentration is a threshold; alpha < 2 reports interior mass.
    pass &= sr.pass;
    if (!quiet)
      std::printf("support   boundary_fraction=%.4f interior_mass=%.4g  %s\n", sr.boundary_mass_fraction,
                  sr.interior_mass, sr.pass ? "PASS" : "FAIL");
  }
  out["pass"] = pass;
  return pass;
}

int cmd_solve(const Common& c, int threads, bool quiet) {
  RunConfig cfg = config_from(c);
  const auto t0 = std::chrono::steady_clock::now();
  Problem p = build_problem(build_inputs(cfg));
  Solution s;
  if (cfg.method == "direct") {
    DirectOptions o;
    o.block_iterations = cfg.block_iterations;
    s = solve_riesz_direct(p, o);
  } else {
    s = solve_riesz_via_bridge(p);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!quiet)
    std::printf("solve     method=%s G_alpha=%.8g G_g=%.8g gap=%.3e bridge_gap=%.3e c=%.6g (%.1f s)\n", s.method.c_str(),
                s.objective_riesz, s.objective_green, s.objective_gap, s.bridge_gap, s.multiplier_c, secs);
  json diag;
  diag["solution"] = solution_scalars(s);
  diag["nodes"] = {{"a1", p.a1_rows.size()}, {"a2", p.a2_rows.size()}};
  const bool pass = run_diagnostics(cfg, p, s, diag, quiet);

  const fs::path dir = prepare_dir(out_dir(c, cfg));
  json outputs = json::object();
  if (wants(cfg, "csv")) {
    write_solution_csv(dir / "solution.csv", p, s.lambda);
    outputs["solution.csv"] = sha256_hex(slurp(dir / "solution.csv"));
  }
  if (wants(cfg, "json")) write_json(dir / "diagnostics.json", diag);
  json manifest{{"command", "solve"},
                {"config_hash", config_hash(cfg.text)},
                {"seed", cfg.seed},
                {"threads", threads},
                {"versions", versions()},
                {"base_dir", fs::absolute(cfg.base_dir).lexically_normal().string()},
                {"outputs", outputs},
                {"pass", pass},
                {"config", cfg.text}};
  write_json(dir / "manifest.json", manifest);
  if (!quiet) std::printf("wrote %s\n", dir.string().c_str());
  return pass ? kPass : kDiagnostics;
}

int cmd_verify(const Common& c, const std::string& solution, bool quiet) {
  RunConfig cfg = config_from(c);
  Problem p = build_problem(build_inputs(cfg));
  Solution s;
  s.lambda = read_solution_csv(solution, p);
  s.method = "file";
  json diag;
  const bool pass = run_diagnostics(cfg, p, s, diag, quiet);
  if (!c.out.empty()) write_json(prepare_dir(c.out) / "diagnostics.json", diag);
  return pass ? kPass : kDiagnostics;
}

int cmd_balayage(const Common& c, int trials, bool quiet) {
  RunConfig cfg = config_from(c);
  Problem p = build_problem(build_inputs(cfg));
  BalayageCheckReport r = balayage_check(p, trials, cfg.seed + 7);
  DiscreteMeasure swept = p.sweeper->sweep(p.xi.xi);
  if (!quiet) {
    std::printf("xi mass %.8g  swept mass %.8g\n", p.xi.total, swept.mass());
    std::printf("random measures %d: mass error %.3e  potential gap %.3e  identity error %.3e", r.trials,
                r.max_mass_error, r.max_potential_gap, r.max_identity_error);
    if (r.closed_form_checked) std::printf("  closed form %.3e", r.max_closed_form_error);
    std::printf("  %s\n", r.pass ? "PASS" : "FAIL");
  }
  if (!c.out.empty()) {
    const fs::path dir = prepare_dir(c.out);
    json j = r;
    j["xi_mass"] = p.xi.total;
    j["swept_xi_mass"] = swept.mass();
    write_json(dir / "balayage.json", j);
    std::ofstream out(dir / "swept_xi.csv");
    out << "index";
    for (int k = 1; k <= p.cloud->dim; ++k) out << ",x" << k;
    out << ",weight\n";
    for (std::size_t i : p.a2_rows) {
      out << i;
      for (int k = 0; k < p.cloud->dim; ++k) out << ',' << num(p.cloud->points(static_cast<Eigen::Index>(i), k));
      out << ',' << num(swept.weights[static_cast<Eigen::Index>(i)]) << '\n';
    }
  }
  return r.pass ? kPass : kDiagnostics;
}

double ball_riesz_capacity_exact(double radius, double alpha) {
  // Unit ball in R^3: Gamma(n/2) / (Gamma(alpha/2) Gamma(n/2 + 1 - alpha/2)), scaling r^(n - alpha).
  return std::tgamma(1.5) / (std::tgamma(alpha / 2) * std::tgamma(2.5 - alpha / 2)) * std::pow(radius, 3 - alpha);
}

int cmd_capacity(const std::string& shape, double radius, int nodes, double alpha, double beta, bool quiet,
                 const std::string& out) {
  const DiagonalRule rule{beta};
  json j{{"shape", shape}, {"radius", radius}, {"nodes", nodes}, {"alpha", alpha}, {"beta", beta}};
  double cap;
  if (shape == "disc") {
    cap = disc_capacity(radius, nodes, alpha, rule);
    if (alpha == 2.0) {
      j["reference_2r_over_pi"] = 2 * radius / std::numbers::pi;
      j["reference_2r_over_pi_squared"] = 2 * radius / (std::numbers::pi * std::numbers::pi);
    }
  } else {
    cap = ball_capacity(radius, nodes, alpha, rule);
    j["reference"] = ball_riesz_capacity_exact(radius, alpha);
  }
  j["capacity"] = cap;
  if (!quiet) {
    std::printf("capacity %.6f\n", cap);
    for (const char* k : {"reference", "reference_2r_over_pi", "reference_2r_over_pi_squared"})
      if (j.contains(k)) std::printf("%s %.6f\n", k, j[k].get<double>());
  }
  if (!out.empty()) write_json(prepare_dir(out) / "capacity.json", j);
  return kPass;
}

int cmd_calibrate(int nodes, double target, double lo, double hi, bool quiet, const std::string& out) {
  BetaCalibration b = calibrate_beta(target, nodes, lo, hi);
  if (!quiet) std::printf("beta %.6f  capacity %.6f  target %.6f  (%d evaluations)\n", b.beta, b.capacity, b.target, b.evaluations);
  if (!out.empty())
    write_json(prepare_dir(out) / "calibration.json",
               json{{"beta", b.beta}, {"capacity", b.capacity}, {"target", b.target}, {"nodes", nodes},
                    {"evaluations", b.evaluations}});
  return kPass;
}

void print_series(const char* head, const std::vector<std::vector<double>>& cols, const std::vector<const char*>& names) {
  std::printf("%s\n%4s", head, "k");
  for (const char* n : names) std::printf(" %16s", n);
  std::printf("\n");
  for (std::size_t i = 0; i < cols.front().size(); ++i) {
    std::printf("%4zu", i + 1);
    for (const auto& c : cols) std::printf(" %16.8g", i < c.size() ? c[i] : std::nan(""));
    std::printf("\n");
  }
}

int finish_experiment(const std::string& name, const json& j, bool pass, const std::string& out, bool quiet) {
  if (!quiet) std::printf("%s %s\n", name.c_str(), pass ? "PASS" : "FAIL");
  if (!out.empty()) write_json(prepare_dir(out) / (name + ".json"), j);
  return pass ? kPass : kDiagnostics;
}

}  // namespace

void write_solution_csv(const fs::path& path, const Problem& p, const SignedDiscreteMeasure& lambda) {
  const PointCloud& cloud = *p.cloud;
  const Eigen::VectorXd u = p.riesz->values * lambda.net();
  const Eigen::VectorXd w = weighted_potential_at_nodes(lambda, p);
  std::vector<char> in_a1(cloud.size(), 0);
  for (std::size_t i : p.a1_rows) in_a1[i] = 1;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "index";
  for (int k = 1; k <= cloud.dim; ++k) out << ",x" << k;
  out << ",weight_plus,weight_minus,potential,weighted_potential,constraint_slack\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << i;
    for (int k = 0; k < cloud.dim; ++k) out << ',' << num(cloud.points(r, k));
    out << ',' << num(lambda.plus.weights[r]) << ',' << num(lambda.minus.weights[r]) << ',' << num(u[r]) << ','
        << num(w[r]) << ',';
    if (in_a1[i]) out << num(p.xi.xi.weights[r] - lambda.plus.weights[r]);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

SignedDiscreteMeasure read_solution_csv(const fs::path& path, const Problem& p) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  const PointCloud& cloud = *p.cloud;
  const int dim = cloud.dim;
  Eigen::VectorXd plus = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cloud.size()));
  Eigen::VectorXd minus = plus;
  std::string line;
  std::getline(in, line);  // header
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const auto need = static_cast<std::size_t>(dim) + 3;
    if (cells.size() < need || row >= cloud.size())
      throw Error(ErrorCode::ConfigError, path.string() + " row " + std::to_string(row + 1) + " does not match the problem");
    const auto r = static_cast<Eigen::Index>(row);
    try {
      for (int k = 0; k < dim; ++k) {
        double x = std::stod(cells[static_cast<std::size_t>(k) + 1]);
        if (std::abs(x - cloud.points(r, k)) > 1e-12 * (1 + std::abs(x)))
          throw Error(ErrorCode::ConfigError, path.string() + " row " + std::to_string(row + 1) +
                                                  " has coordinates that differ from the config's nodes");
      }
      plus[r] = std::stod(cells[static_cast<std::size_t>(dim) + 1]);
      minus[r] = std::stod(cells[static_cast<std::size_t>(dim) + 2]);
    } catch (const std::invalid_argument&) {
      throw Error(ErrorCode::ConfigError, path.string() + " row " + std::to_string(row + 1) + ": not a number");
    }
    ++row;
  }
  if (row != cloud.size())
    throw Error(ErrorCode::ConfigError, path.string() + " has " + std::to_string(row) + " rows, the problem has " +
                                            std::to_string(cloud.size()) + " nodes");
  return SignedDiscreteMeasure(DiscreteMeasure(p.cloud, plus), DiscreteMeasure(p.cloud, minus));
}

json versions() {
  return json{{"condenser", CONDENSER_VERSION},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"cli11", CLI11_VERSION},
              {"openssl", OPENSSL_VERSION_TEXT},
              {"compiler", __VERSION__}};
}

int run(int argc, char** argv) {
  CLI::App app{"Constrained condenser energy problems for Riesz and Green kernels"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet", quiet, "print nothing on success");

  Common solve_opts;
  auto* solve = app.add_subcommand("solve", "solve a configured problem and run its diagnostics");
  add_common(solve, solve_opts, false);
  solve->add_option("--manifest", solve_opts.manifest, "re-run the config embedded in a manifest")
      ->check(CLI::ExistingFile)
      ->excludes("--config");

  Common verify_opts;
  std::string solution_csv;
  auto* verify = app.add_subcommand("verify", "run the diagnostics on a stored solution CSV");
  add_common(verify, verify_opts, true);
  verify->add_option("--solution", solution_csv, "solution CSV written by solve")->required()->check(CLI::ExistingFile);

  Common bal_opts;
  int trials = 10;
  auto* bal = app.add_subcommand("balayage", "sweep xi and random measures onto the complement");
  add_common(bal, bal_opts, true);
  bal->add_option("--trials", trials, "random measures")->check(CLI::Range(1, 1000));

  std::string shape = "disc";
  double radius = 1.0, alpha = 2.0, beta = 0.54;
  int nodes = 2000;
  std::string cap_out;
  auto* cap = app.add_subcommand("capacity", "capacity of a disc or ball in R^3");
  cap->add_option("--shape", shape)->check(CLI::IsMember({"disc", "ball"}));
  cap->add_option("--radius", radius)->check(CLI::PositiveNumber);
  cap->add_option("--nodes", nodes)->check(CLI::Range(2, 20000));
  cap->add_option("--alpha", alpha)->check(CLI::Range(0.0, 3.0));
  cap->add_option("--beta", beta)->check(CLI::PositiveNumber);
  cap->add_option("--out", cap_out);

  int cal_nodes = 2000;
  double target = 2.0 / std::numbers::pi, lo = 0.1, hi = 2.0;
  std::string cal_out;
  auto* cal = app.add_subcommand("calibrate-beta", "bisect beta so the Newtonian unit-disc capacity hits a target");
  cal->add_option("--nodes", cal_nodes)->check(CLI::Range(2, 20000));
  cal->add_option("--target", target, "unit-disc capacity (default 2/pi)")->check(CLI::PositiveNumber);
  cal->add_option("--lo", lo)->check(CLI::PositiveNumber);
  cal->add_option("--hi", hi)->check(CLI::PositiveNumber);
  cal->add_option("--out", cal_out);

  auto* exp = app.add_subcommand("experiment", "canned experiments");
  exp->require_subcommand(1);
  std::string exp_out;
  double exp_beta = 0.54;
  exp->add_option("--out", exp_out, "directory for <experiment>.json");
  exp->add_option("--beta", exp_beta)->check(CLI::PositiveNumber);

  ShortCircuitOptions sc;
  auto* sc_cmd = exp->add_subcommand("short-circuit", "inverse Green capacities of the growing disc stack");
  sc_cmd->add_option("--levels", sc.levels)->check(CLI::Range(2, 12));
  sc_cmd->add_option("--base-nodes", sc.base_nodes)->check(CLI::Range(4, 2000));
  sc_cmd->add_option("--a2-nodes", sc.a2_nodes)->check(CLI::Range(10, 20000));

  UnboundedConstraintOptions ub;
  auto* ub_cmd = exp->add_subcommand("unbounded-constraint", "optima under the truncated escaping-disc constraints");
  ub_cmd->add_option("--discs", ub.discs)->check(CLI::Range(3, 12));
  ub_cmd->add_option("--nodes-per-disc", ub.nodes_per_disc)->check(CLI::Range(4, 2000));

  Common du_opts;
  auto* du_cmd = exp->add_subcommand("duality", "dual unconstrained problem of a configured zero-field run");
  add_common(du_cmd, du_opts, true);

  CounterexampleOptions cx;
  auto* cx_cmd = exp->add_subcommand("counterexample", "Green vs Riesz partial sums of the shrinking discs");
  cx_cmd->add_option("--terms", cx.terms)->check(CLI::Range(1, 12));
  cx_cmd->add_option("--nodes-per-disc", cx.nodes_per_disc)->check(CLI::Range(4, 5000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif
  try {
    if (*solve) {
      if (solve_opts.config.empty() && solve_opts.manifest.empty())
        throw Error(ErrorCode::ConfigError, "solve needs --config or --manifest");
      return cmd_solve(solve_opts, threads, quiet);
    }
    if (*verify) return cmd_verify(verify_opts, solution_csv, quiet);
    if (*bal) return cmd_balayage(bal_opts, trials, quiet);
    if (*cap) return cmd_capacity(shape, radius, nodes, alpha, beta, quiet, cap_out);
    if (*cal) return cmd_calibrate(cal_nodes, target, lo, hi, quiet, cal_out);
    if (*exp) {
      const DiagonalRule rule{exp_beta};
      if (*sc_cmd) {
        sc.rule = rule;
        ShortCircuitReport r = short_circuit_experiment(sc);
        if (!quiet)
          print_series("short-circuit", {r.inverse_green_capacity, r.riesz_difference, r.relative_gap},
                       {"1/c_g(K_j)", "|l_j - l_j'|^2", "rel_gap"});
        return finish_experiment("short-circuit", r, r.pass, exp_out, quiet);
      }
      if (*ub_cmd) {
        ub.rule = rule;
        UnboundedConstraintReport r = unbounded_constraint_experiment(ub);
        if (!quiet) {
          std::vector<double> levels(r.levels.begin(), r.levels.end());
          print_series("unbounded-constraint", {levels, r.optima}, {"m", "optimum"});
          print_series("components", {r.component_norms, r.component_bounds}, {"|xi_j|", "j^-2"});
        }
        return finish_experiment("unbounded-constraint", r, r.pass, exp_out, quiet);
      }
      if (*du_cmd) {
        RunConfig cfg = config_from(du_opts);
        Problem p = build_problem(build_inputs(cfg));
        Solution s = solve_riesz_via_bridge(p);
        DualityReport r = duality_check(p, s);
        if (!quiet)
          std::printf("q=%.6g theta_mass=%.12g eta=%.6g wsc1=%.3e wsc2=%.3e objective_gap=%.3e\n", r.q, r.theta_mass,
                      r.eta, r.maxviol_wsc1, r.maxviol_wsc2, r.objective_gap);
        return finish_experiment("duality", r, r.pass, du_opts.out.empty() ? exp_out : du_opts.out, quiet);
      }
      if (*cx_cmd) {
        cx.rule = rule;
        CounterexampleReport r = counterexample_experiment(cx);
        if (!quiet)
          print_series("counterexample", {r.c, r.r, r.green_partial_sums, r.riesz_partial_sums, r.riesz_increments},
                       {"c_k", "r_k", "|eta_l|_g", "E_2(eta_l)", "increment/E_2"});
        return finish_experiment("counterexample", r, r.pass, exp_out, quiet);
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolver;
  }
  return kUsage;
}

}  // namespace condenser::cli
