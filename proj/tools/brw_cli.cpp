#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "brw/config.hpp"
#include "brw/errors.hpp"
#include "brw/green.hpp"
#include "brw/moments.hpp"
#include "brw/simulator.hpp"
#include "brw/spectral.hpp"
#include "brw/verify.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

using nlohmann::json;

json header_block(const brw::ConfigFile& cfg) {
  json h;
  h["version"] = kVersion;
  h["seed"] = cfg.simulation.seed;
  h["config"] = json::parse(cfg.resolved);
  return h;
}

void csv_header(std::ostream& out, const brw::ConfigFile& cfg) {
  out << "# version=" << kVersion << "\n";
  out << "# seed=" << cfg.simulation.seed << "\n";
  out << "# config=" << cfg.resolved << "\n";
}

std::string site_str(const brw::Site& s, int dim) {
  std::string out;
  for (int i = 0; i < dim; ++i) {
    if (i) out += ";";
    out += std::to_string(s[i]);
  }
  return out;
}

brw::QuadratureSpec quad_spec(const brw::ConfigFile& cfg) {
  return {cfg.numerics.quadrature_nodes, cfg.numerics.quadrature_tol};
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw brw::ParseError("cannot open output file: " + path);
  return file;
}

int cmd_validate(const brw::ConfigFile& cfg, const std::string& out_path) {
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  json doc;
  doc["header"] = header_block(cfg);
  doc["valid"] = true;
  doc["dim"] = cfg.brw.kernel.dim;
  doc["sources"] = cfg.brw.source_count();
  doc["jump_rate"] = cfg.brw.kernel.jump_rate();
  json intensities = json::array();
  for (const auto& s : cfg.brw.sources) intensities.push_back(s.intensity);
  doc["intensities"] = intensities;
  out << doc.dump(2) << "\n";
  return 0;
}

int cmd_symbol(const brw::ConfigFile& cfg, int nodes, const std::string& out_path) {
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  csv_header(out, cfg);
  const int d = cfg.brw.kernel.dim;
  out << "theta";
  for (int i = 1; i < d; ++i) out << ";theta" << i;
  out << ",phi\n";
  std::vector<int> idx(d, 0);
  std::vector<double> theta(d);
  const double pi = 3.14159265358979323846;
  bool done = false;
  while (!done) {
    for (int i = 0; i < d; ++i) theta[i] = -pi + 2.0 * pi * idx[i] / (nodes - 1);
    for (int i = 0; i < d; ++i) out << (i ? ";" : "") << theta[i];
    out << "," << cfg.brw.kernel.symbol(theta) << "\n";
    int i = d - 1;
    while (i >= 0 && ++idx[i] == nodes) idx[i--] = 0;
    done = i < 0;
  }
  return 0;
}

int cmd_green(const brw::ConfigFile& cfg, double lambda, int radius,
              const std::string& out_path) {
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  csv_header(out, cfg);
  out << "x,I_x\n";
  brw::Box box{cfg.brw.kernel.dim, radius};
  for (std::size_t k = 0; k < box.size(); ++k) {
    brw::Site x = box.site(k);
    out << site_str(x, cfg.brw.kernel.dim) << ","
        << brw::green_value(cfg.brw.kernel, x, lambda, quad_spec(cfg)) << "\n";
  }
  return 0;
}

int cmd_lambda0(const brw::ConfigFile& cfg, const std::string& out_path) {
  brw::Lambda0Result r = brw::find_lambda0(cfg.brw, quad_spec(cfg));
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  json doc;
  doc["header"] = header_block(cfg);
  doc["supercritical"] = r.lambda0.has_value();
  if (r.lambda0) {
    doc["lambda0"] = *r.lambda0;
    doc["residual"] = r.residual;
    doc["bracket"] = {r.bracket_lo, r.bracket_hi};
  } else {
    doc["lambda0"] = nullptr;
    doc["extrapolated_absent"] = r.extrapolated_absent;
  }
  if (!r.note.empty()) doc["note"] = r.note;
  out << doc.dump(2) << "\n";
  return 0;
}

int cmd_spectrum(const brw::ConfigFile& cfg, const std::string& out_path) {
  brw::SpectralResult r =
      brw::analyze(cfg.brw, cfg.numerics.window_radius, quad_spec(cfg));
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  json doc;
  doc["header"] = header_block(cfg);
  doc["supercritical"] = r.supercritical();
  if (!r.supercritical()) {
    doc["positive_eigs"] = json::array();
    out << doc.dump(2) << "\n";
    return 1;
  }
  doc["lambda0"] = *r.lambda0;
  doc["residual"] = r.residual;
  doc["positive_eigs"] = r.positive_eigs;
  doc["spectral_gap"] = r.spectral_gap;
  doc["window_radius"] = r.window_radius;
  doc["tail_bound"] = r.tail_bound;
  json f = json::array(), psi_j = json::array();
  for (int j = 0; j < cfg.brw.source_count(); ++j) {
    const auto& src = cfg.brw.sources[j];
    f.push_back({{"position", site_str(src.position, cfg.brw.kernel.dim)},
                 {"f", r.f_extended.at(src.position)},
                 {"psi", brw::psi(cfg.brw, r, src.position)}});
  }
  doc["sources"] = f;
  json fx = json::array();
  for (const auto& [x, v] : r.f_extended)
    fx.push_back({{"x", site_str(x, cfg.brw.kernel.dim)},
                  {"f", v},
                  {"psi", brw::psi(cfg.brw, r, x)}});
  doc["f_extended"] = fx;
  out << doc.dump(2) << "\n";
  return 0;
}

int cmd_moments(const brw::ConfigFile& cfg, int n_max, int window,
                const std::string& out_path) {
  brw::SpectralResult sp =
      brw::analyze(cfg.brw, cfg.numerics.window_radius, quad_spec(cfg));
  if (!sp.supercritical()) {
    std::cerr << "moments: configuration is not supercritical\n";
    return 1;
  }
  brw::MomentTable table = brw::moment_constants(cfg.brw, sp, n_max, window,
                                                 cfg.numerics.truncation_radius);
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  csv_header(out, cfg);
  out << "# lambda0=" << table.lambda0 << " n_star=" << table.n_star << "\n";
  out << "n,x,y,C_xy,C_x,D_bound_margin\n";
  const int d = cfg.brw.kernel.dim;
  for (const auto& [key, cxy] : table.C_xy) {
    const auto& [n, x, y] = key;
    out << n << "," << site_str(x, d) << "," << site_str(y, d) << "," << cxy << ","
        << table.C_x.at({n, x}) << "," << table.d_bound_margin << "\n";
  }
  return 0;
}

int cmd_carleman(const brw::ConfigFile& cfg, int n_max, const std::string& out_path) {
  brw::SpectralResult sp =
      brw::analyze(cfg.brw, cfg.numerics.window_radius, quad_spec(cfg));
  if (!sp.supercritical()) {
    std::cerr << "carleman: configuration is not supercritical\n";
    return 1;
  }
  brw::MomentTable table = brw::moment_constants(cfg.brw, sp, n_max, 1,
                                                 cfg.numerics.truncation_radius);
  brw::CarlemanReport r = brw::carleman_diag(table, brw::make_site({0}));
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  json doc;
  doc["header"] = header_block(cfg);
  doc["m"] = r.m;
  doc["partial_sums"] = r.partial_sums;
  doc["lower_scale"] = r.lower_scale;
  doc["bound_holds"] = r.bound_holds;
  doc["sums_increasing"] = r.sums_increasing;
  doc["divergent_verdict"] = r.divergent_verdict;
  out << doc.dump(2) << "\n";
  return 0;
}

int cmd_simulate(const brw::ConfigFile& cfg, const std::string& runs_path,
                 const std::string& report_path) {
  brw::SimOptions opts;
  opts.horizon = cfg.simulation.horizon;
  opts.cap = cfg.simulation.cap;
  opts.snapshot_count = cfg.simulation.snapshots;
  std::vector<brw::SimulationRun> runs = brw::run_many(
      cfg.brw, cfg.simulation.seed, cfg.simulation.replicas, opts, cfg.simulation.threads);

  std::ofstream runs_file(runs_path);
  if (!runs_file) throw brw::ParseError("cannot open output file: " + runs_path);
  csv_header(runs_file, cfg);
  runs_file << "replica,t,total,outcome\n";
  for (const auto& r : runs) {
    const char* outcome = r.outcome == brw::Outcome::Completed ? "completed"
                          : r.outcome == brw::Outcome::Extinct ? "extinct"
                                                               : "cap_hit";
    for (std::size_t k = 0; k < r.totals.size(); ++k)
      runs_file << r.replica << "," << r.snapshot_times[k] << "," << r.totals[k] << ","
                << outcome << "\n";
  }

  brw::Lambda0Result l0 = brw::find_lambda0(cfg.brw, quad_spec(cfg));
  json doc;
  doc["header"] = header_block(cfg);
  try {
    brw::EstimatorReport est = brw::estimate(cfg.brw, runs, l0.lambda0);
    doc["lambda_hat"] = est.lambda_hat;
    doc["lambda_ci"] = {est.lambda_ci_lo, est.lambda_ci_hi};
    json psi = json::array();
    for (const auto& [x, v] : est.psi_hat)
      psi.push_back({{"x", site_str(x, cfg.brw.kernel.dim)}, {"share", v}});
    doc["psi_hat"] = psi;
    doc["psi_source_ci"] = {est.psi_source_ci_lo, est.psi_source_ci_hi};
    doc["xi_moments"] = est.xi_moments;
    doc["extinction_fraction"] = est.extinction_fraction;
    doc["survivors"] = est.survivors;
    doc["mean_totals"] = est.mean_totals;
    doc["snapshot_times"] = est.snapshot_times;
  } catch (const brw::TooFewSurvivors& e) {
    doc["estimator_error"] = e.what();
  }
  if (l0.lambda0) doc["lambda0_spectral"] = *l0.lambda0;

  std::ofstream report_file;
  std::ostream& report = open_output(report_file, report_path);
  report << doc.dump(2) << "\n";
  std::cerr << "simulate: wrote " << runs.size() << " runs to " << runs_path << "\n";
  return 0;
}

int cmd_verify(const brw::VerifyOptions& opts) {
  std::vector<brw::CriterionResult> results = brw::run_acceptance(opts);
  bool all = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.name
              << ") [" << r.seconds << " s]";
    if (!r.detail.empty()) std::cout << " - " << r.detail;
    std::cout << "\n";
    all = all && r.passed;
  }
  std::cout << (all ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << "\n";
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching random walk spectral analysis and simulation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path, out_path;
  double lambda = 1.0;
  int radius = 10, nodes = 65, n_max = 6, window = 3;
  std::string runs_path = "runs.csv", report_path = "report.json";

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "configuration file (JSON)")->required();
    sub->add_option("-o,--output", out_path, "output path (default stdout)");
  };

  CLI::App* validate = app.add_subcommand("validate", "parse and validate a configuration");
  add_config(validate);

  CLI::App* symbol = app.add_subcommand("symbol", "tabulate the Fourier symbol phi(theta)");
  add_config(symbol);
  symbol->add_option("--nodes", nodes, "grid nodes per axis");

  CLI::App* green = app.add_subcommand("green", "tabulate the Green's function I_x(lambda)");
  add_config(green);
  green->add_option("--lambda", lambda, "spectral parameter lambda > 0")->required();
  green->add_option("--radius", radius, "tabulation radius");

  CLI::App* lambda0 = app.add_subcommand("lambda0", "leading eigenvalue of the evolution operator");
  add_config(lambda0);

  CLI::App* spectrum = app.add_subcommand("spectrum", "all positive eigenvalues, f and psi");
  add_config(spectrum);

  CLI::App* moments = app.add_subcommand("moments", "moment constants C_n as CSV");
  add_config(moments);
  moments->add_option("--n-max", n_max, "highest moment order");
  moments->add_option("--window", window, "site window radius for x, y");

  CLI::App* carleman = app.add_subcommand("carleman", "Carleman divergence diagnostic");
  add_config(carleman);
  int carleman_n_max = 20;
  carleman->add_option("--n-max", carleman_n_max, "highest moment order");

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo runs + estimator report");
  simulate->add_option("config", config_path, "configuration file (JSON)")->required();
  simulate->add_option("--runs-out", runs_path, "runs CSV path");
  simulate->add_option("--report-out", report_path, "estimator report JSON path");
  std::uint64_t sim_seed = 0, sim_replicas = 0, sim_cap = 0;
  double sim_horizon = 0.0;
  simulate->add_option("--seed", sim_seed, "override master seed");
  simulate->add_option("--replicas", sim_replicas, "override replica count");
  simulate->add_option("--horizon", sim_horizon, "override time horizon");
  simulate->add_option("--cap", sim_cap, "override population cap");

  CLI::App* verify = app.add_subcommand("verify", "run the full acceptance pipeline");
  brw::VerifyOptions vopts;
  verify->add_option("--seed", vopts.seed, "master seed");
  verify->add_option("--replicas", vopts.replicas, "Monte Carlo replicas");
  verify->add_option("--horizon", vopts.horizon, "Monte Carlo horizon");
  verify->add_option("--cap", vopts.cap, "population cap");
  verify->add_option("--threads", vopts.threads, "worker threads (0 = hardware)");
  verify->add_flag("--skip-simulation", vopts.skip_simulation,
                   "skip the two Monte Carlo criteria");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) return cmd_verify(vopts);

    brw::ConfigFile cfg = brw::parse_config(config_path);
    if (simulate->parsed()) {
      // apply flag overrides to the resolved document and re-parse, so the
      // headers echo exactly what was run
      nlohmann::json doc = nlohmann::json::parse(cfg.resolved);
      if (simulate->count("--seed")) doc["simulation"]["seed"] = sim_seed;
      if (simulate->count("--replicas")) doc["simulation"]["replicas"] = sim_replicas;
      if (simulate->count("--horizon")) doc["simulation"]["horizon"] = sim_horizon;
      if (simulate->count("--cap")) doc["simulation"]["cap"] = sim_cap;
      cfg = brw::parse_config_json(doc);
      return cmd_simulate(cfg, runs_path, report_path);
    }
    if (validate->parsed()) return cmd_validate(cfg, out_path);
    if (symbol->parsed()) return cmd_symbol(cfg, nodes, out_path);
    if (green->parsed()) return cmd_green(cfg, lambda, radius, out_path);
    if (lambda0->parsed()) return cmd_lambda0(cfg, out_path);
    if (spectrum->parsed()) return cmd_spectrum(cfg, out_path);
    if (moments->parsed()) return cmd_moments(cfg, n_max, window, out_path);
    if (carleman->parsed()) return cmd_carleman(cfg, carleman_n_max, out_path);
  } catch (const brw::NotSupercritical& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
