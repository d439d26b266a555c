#include <cstdio>
#include <cstring>

#include "brw/verify.hpp"

int main(int argc, char** argv) {
  brw::VerifyOptions options;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--skip-simulation") == 0) options.skip_simulation = true;

  std::vector<brw::CriterionResult> results = brw::run_acceptance(options);
  bool all_passed = true;
  for (const auto& r : results) {
    std::printf("%s criterion %d (%s) [%.2f s] - %s\n", r.passed ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.seconds, r.detail.c_str());
    all_passed = all_passed && r.passed;
  }
  std::printf("%s\n", all_passed ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED");
  return all_passed ? 0 : 1;
}
