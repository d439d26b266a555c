#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "brw/lattice.hpp"
#include "brw/walk_kernel.hpp"

namespace brw {

// Deterministic 64-bit generator (splitmix64).  Per-replica streams are
// derived from (master seed, replica index) so replicas are reproducible
// independently and in parallel.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}
  static Rng for_replica(std::uint64_t master_seed, std::uint64_t replica);

  std::uint64_t next_u64();
  double next_double();                  // uniform in [0,1)
  double next_exponential(double rate);  // Exp(rate)
};

// Aggregated per-site population with a partial-sum (Fenwick) tree over
// site event weights, so one event costs O(log occupied sites).
class PopulationState {
 public:
  PopulationState(const BRWConfig& config, const Site& initial);

  std::uint64_t total() const { return total_; }
  double clock() const { return clock_; }
  double total_rate() const;
  std::uint64_t count_at(const Site& site) const;
  std::vector<std::pair<Site, std::uint64_t>> occupied() const;

  struct Event {
    enum Kind { Jump, Branch } kind;
    Site site;
    Site destination;  // for jumps
    int offspring;     // for branches (n != 1; 0 = death)
    double dt;
  };

  // One aggregated stochastic simulation step.  Throws EmptyPopulation.
  Event step(Rng& rng);

 private:
  struct SourceInfo {
    int index;
    double branch_rate;  // -b_1
  };

  const BRWConfig* config_;
  double walk_rate_;  // -a(0)
  std::unordered_map<Site, SourceInfo, SiteHash> source_at_;

  struct Slot {
    Site site;
    std::uint64_t count = 0;
    double unit_rate = 0.0;
  };
  std::vector<Slot> slots_;
  std::vector<int> free_slots_;
  std::vector<double> fenwick_;
  std::unordered_map<Site, int, SiteHash> slot_of_;
  std::uint64_t total_ = 0;
  double clock_ = 0.0;

  double unit_rate(const Site& site) const;
  void fenwick_add(int slot, double delta);
  double fenwick_total() const;
  int fenwick_find(double target) const;
  void add_particles(const Site& site, std::int64_t delta);
};

enum class Outcome { Completed, Extinct, CapHit };

struct SimulationRun {
  std::uint64_t master_seed = 0;
  std::uint64_t replica = 0;
  Outcome outcome = Outcome::Completed;
  double final_time = 0.0;  // horizon, extinction time or censoring time
  std::vector<double> snapshot_times;
  std::vector<std::uint64_t> totals;  // last state before each snapshot time
  std::vector<std::pair<Site, std::uint64_t>> final_counts;
  std::uint64_t final_total = 0;
};

struct SimOptions {
  double horizon = 25.0;
  std::uint64_t cap = 1000000;
  int snapshot_count = 64;
  Site initial{0, 0, 0};
};

SimulationRun run(const BRWConfig& config, std::uint64_t master_seed, std::uint64_t replica,
                  const SimOptions& options);

// Replicas executed concurrently on `threads` workers (0 = hardware default).
std::vector<SimulationRun> run_many(const BRWConfig& config, std::uint64_t master_seed,
                                    std::uint64_t replicas, const SimOptions& options,
                                    int threads = 0);

struct EstimatorReport {
  double lambda_hat = 0.0;
  double lambda_ci_lo = 0.0, lambda_ci_hi = 0.0;
  std::unordered_map<Site, double, SiteHash> psi_hat;  // empirical mu_T(y)/mu_T
  double psi_source_ci_lo = 0.0, psi_source_ci_hi = 0.0;  // CI at the first source
  std::vector<double> xi_samples;                         // mu_T e^{-lambda0 T}
  std::vector<double> xi_moments;                         // first 4 empirical moments
  double extinction_fraction = 0.0;
  std::size_t survivors = 0;
  std::vector<double> mean_totals;  // per snapshot, censoring-aware
  std::vector<double> snapshot_times;
};

// lambda_hat from OLS of log replica-mean totals on [T/2, T]; psi_hat from
// survivor-conditioned final shares; bootstrap percentile CIs (10^3 resamples).
// Throws TooFewSurvivors below 100 surviving replicas.
EstimatorReport estimate(const BRWConfig& config, const std::vector<SimulationRun>& runs,
                         std::optional<double> lambda0);

}  // namespace brw
