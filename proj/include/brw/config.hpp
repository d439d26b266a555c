#pragma once

#include <json.hpp>
#include <string>

#include "brw/simulator.hpp"
#include "brw/walk_kernel.hpp"

namespace brw {

struct NumericOptions {
  int quadrature_nodes = 16;
  double quadrature_tol = 1e-10;
  int truncation_radius = 200;
  int window_radius = 12;
  int n_max = 6;
};

struct SimulationOptions {
  double horizon = 25.0;
  std::uint64_t cap = 1000000;
  std::uint64_t replicas = 10000;
  std::uint64_t seed = 1;
  int snapshots = 64;
  int threads = 0;  // 0 = hardware default
};

// Parsed and validated configuration file.  Parsing is strict: unknown keys
// are errors, and every resolved value (defaults included) is echoed into
// output headers.
struct ConfigFile {
  BRWConfig brw;
  NumericOptions numerics;
  SimulationOptions simulation;
  std::string resolved;  // canonical JSON echo of the full resolved config
};

// Throws ParseError with a field-addressed message, or the validation
// errors from walk_kernel.
ConfigFile parse_config(const std::string& path);
ConfigFile parse_config_json(const nlohmann::json& doc);

}  // namespace brw
