#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace brw {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::uint64_t replicas = 10000;
  double horizon = 25.0;
  std::uint64_t cap = 1000000;
  int threads = 0;
  bool skip_simulation = false;  // skips the two Monte Carlo criteria
};

// Runs the full verification pipeline over the built-in reference
// configurations and returns one result per criterion.
std::vector<CriterionResult> run_acceptance(const VerifyOptions& options);

}  // namespace brw
