#include "brw/config.hpp"

#include <fstream>

#include "brw/errors.hpp"

namespace brw {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) known = true;
    if (!known) throw ParseError("unknown key \"" + key + "\" in " + where);
  }
}

std::vector<int> int_vector(const json& arr, const std::string& where, int dim) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != dim)
    throw ParseError(where + " must be an array of " + std::to_string(dim) + " integers");
  std::vector<int> v;
  for (const auto& e : arr) {
    if (!e.is_number_integer()) throw ParseError(where + " must contain integers");
    v.push_back(e.get<int>());
  }
  return v;
}

}  // namespace

ConfigFile parse_config_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("config root must be an object");
  reject_unknown(doc, "config root", {"dim", "kernel", "sources", "numerics", "simulation"});

  if (!doc.contains("dim") || !doc["dim"].is_number_integer())
    throw ParseError("\"dim\" (integer) is required");
  const int dim = doc["dim"].get<int>();

  if (!doc.contains("kernel") || !doc["kernel"].is_array())
    throw ParseError("\"kernel\" (array of {offset, rate}) is required");
  std::vector<std::pair<Site, double>> entries;
  int ki = 0;
  for (const auto& entry : doc["kernel"]) {
    std::string where = "kernel[" + std::to_string(ki++) + "]";
    if (!entry.is_object()) throw ParseError(where + " must be an object");
    reject_unknown(entry, where, {"offset", "rate"});
    if (!entry.contains("offset") || !entry.contains("rate"))
      throw ParseError(where + " needs \"offset\" and \"rate\"");
    Site z = make_site(int_vector(entry["offset"], where + ".offset", dim));
    if (!entry["rate"].is_number()) throw ParseError(where + ".rate must be a number");
    entries.emplace_back(z, entry["rate"].get<double>());
  }

  if (!doc.contains("sources") || !doc["sources"].is_array())
    throw ParseError("\"sources\" (array of {position, coeffs}) is required");
  std::vector<BranchingSource> sources;
  int si = 0;
  for (const auto& entry : doc["sources"]) {
    std::string where = "sources[" + std::to_string(si++) + "]";
    if (!entry.is_object()) throw ParseError(where + " must be an object");
    reject_unknown(entry, where, {"position", "coeffs"});
    if (!entry.contains("position") || !entry.contains("coeffs"))
      throw ParseError(where + " needs \"position\" and \"coeffs\"");
    Site pos = make_site(int_vector(entry["position"], where + ".position", dim));
    std::vector<double> coeffs;
    if (!entry["coeffs"].is_array()) throw ParseError(where + ".coeffs must be an array");
    for (const auto& c : entry["coeffs"]) {
      if (!c.is_number()) throw ParseError(where + ".coeffs must contain numbers");
      coeffs.push_back(c.get<double>());
    }
    sources.push_back(make_source(pos, coeffs));
  }

  ConfigFile cfg;
  if (doc.contains("numerics")) {
    const json& num = doc["numerics"];
    reject_unknown(num, "numerics",
                   {"quadrature_nodes", "quadrature_tol", "truncation_radius", "window_radius",
                    "n_max"});
    if (num.contains("quadrature_nodes")) cfg.numerics.quadrature_nodes = num["quadrature_nodes"];
    if (num.contains("quadrature_tol")) cfg.numerics.quadrature_tol = num["quadrature_tol"];
    if (num.contains("truncation_radius"))
      cfg.numerics.truncation_radius = num["truncation_radius"];
    if (num.contains("window_radius")) cfg.numerics.window_radius = num["window_radius"];
    if (num.contains("n_max")) cfg.numerics.n_max = num["n_max"];
  }
  if (doc.contains("simulation")) {
    const json& sim = doc["simulation"];
    reject_unknown(sim, "simulation",
                   {"horizon", "cap", "replicas", "seed", "snapshots", "threads"});
    if (sim.contains("horizon")) cfg.simulation.horizon = sim["horizon"];
    if (sim.contains("cap")) cfg.simulation.cap = sim["cap"];
    if (sim.contains("replicas")) cfg.simulation.replicas = sim["replicas"];
    if (sim.contains("seed")) cfg.simulation.seed = sim["seed"];
    if (sim.contains("snapshots")) cfg.simulation.snapshots = sim["snapshots"];
    if (sim.contains("threads")) cfg.simulation.threads = sim["threads"];
  }

  cfg.brw = make_config(validate_kernel(entries, dim), std::move(sources));

  // canonical echo with all defaults resolved
  json resolved;
  resolved["dim"] = dim;
  resolved["kernel"] = json::array();
  for (const auto& [z, rate] : cfg.brw.kernel.jumps) {
    json e;
    e["offset"] = std::vector<int>(z.begin(), z.begin() + dim);
    e["rate"] = rate;
    resolved["kernel"].push_back(e);
  }
  resolved["sources"] = json::array();
  for (const auto& src : cfg.brw.sources) {
    json e;
    e["position"] = std::vector<int>(src.position.begin(), src.position.begin() + dim);
    e["coeffs"] = src.coeffs;
    resolved["sources"].push_back(e);
  }
  resolved["numerics"] = {{"quadrature_nodes", cfg.numerics.quadrature_nodes},
                          {"quadrature_tol", cfg.numerics.quadrature_tol},
                          {"truncation_radius", cfg.numerics.truncation_radius},
                          {"window_radius", cfg.numerics.window_radius},
                          {"n_max", cfg.numerics.n_max}};
  resolved["simulation"] = {{"horizon", cfg.simulation.horizon},
                            {"cap", cfg.simulation.cap},
                            {"replicas", cfg.simulation.replicas},
                            {"seed", cfg.simulation.seed},
                            {"snapshots", cfg.simulation.snapshots},
                            {"threads", cfg.simulation.threads}};
  cfg.resolved = resolved.dump();
  return cfg;
}

ConfigFile parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config_json(doc);
}

}  // namespace brw
