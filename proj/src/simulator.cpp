#include "brw/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "brw/errors.hpp"

namespace brw {

Rng Rng::for_replica(std::uint64_t master_seed, std::uint64_t replica) {
  // splitmix64 walks its state in steps of the golden-ratio constant, so
  // stream offsets must not be multiples of it: hash the replica index
  // through the output mixer to land the streams at unrelated states.
  Rng master(master_seed);
  Rng index(replica);
  return Rng(master.next_u64() ^ index.next_u64());
}

std::uint64_t Rng::next_u64() {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

double Rng::next_exponential(double rate) {
  return -std::log1p(-next_double()) / rate;
}

PopulationState::PopulationState(const BRWConfig& config, const Site& initial)
    : config_(&config), walk_rate_(config.kernel.jump_rate()) {
  for (int i = 0; i < config.source_count(); ++i) {
    const auto& src = config.sources[i];
    source_at_[src.position] = SourceInfo{i, -src.coeffs[1]};
  }
  fenwick_.assign(2, 0.0);
  add_particles(initial, 1);
}

double PopulationState::unit_rate(const Site& site) const {
  auto it = source_at_.find(site);
  return walk_rate_ + (it == source_at_.end() ? 0.0 : it->second.branch_rate);
}

void PopulationState::fenwick_add(int slot, double delta) {
  for (std::size_t i = slot + 1; i < fenwick_.size(); i += i & (-i)) fenwick_[i] += delta;
}

double PopulationState::fenwick_total() const {
  double sum = 0.0;
  for (std::size_t i = fenwick_.size() - 1; i > 0; i -= i & (-i)) sum += fenwick_[i];
  return sum;
}

int PopulationState::fenwick_find(double target) const {
  // smallest index with strictly larger prefix sum
  std::size_t pos = 0;
  std::size_t mask = fenwick_.size() >> 1;
  while (mask > 0) {
    std::size_t next = pos + mask;
    if (next < fenwick_.size() && fenwick_[next] <= target) {
      target -= fenwick_[next];
      pos = next;
    }
    mask >>= 1;
  }
  return static_cast<int>(pos);  // 0-based slot
}

void PopulationState::add_particles(const Site& site, std::int64_t delta) {
  auto it = slot_of_.find(site);
  int slot;
  if (it == slot_of_.end()) {
    if (!free_slots_.empty()) {
      slot = free_slots_.back();
      free_slots_.pop_back();
    } else {
      slot = static_cast<int>(slots_.size());
      slots_.push_back({});
      if (slots_.size() + 1 > fenwick_.size()) {
        // rebuild at doubled capacity
        std::size_t cap = fenwick_.size();
        while (slots_.size() + 1 > cap) cap *= 2;
        fenwick_.assign(cap, 0.0);
        for (std::size_t s = 0; s < slots_.size(); ++s)
          if (slots_[s].count > 0)
            fenwick_add(static_cast<int>(s), slots_[s].count * slots_[s].unit_rate);
      }
    }
    slots_[slot] = Slot{site, 0, unit_rate(site)};
    slot_of_[site] = slot;
  } else {
    slot = it->second;
  }

  Slot& s = slots_[slot];
  double old_weight = static_cast<double>(s.count) * s.unit_rate;
  s.count = static_cast<std::uint64_t>(static_cast<std::int64_t>(s.count) + delta);
  total_ = static_cast<std::uint64_t>(static_cast<std::int64_t>(total_) + delta);
  double new_weight = static_cast<double>(s.count) * s.unit_rate;
  fenwick_add(slot, new_weight - old_weight);
  if (s.count == 0) {
    slot_of_.erase(s.site);
    free_slots_.push_back(slot);
  }
}

double PopulationState::total_rate() const { return fenwick_total(); }

std::uint64_t PopulationState::count_at(const Site& site) const {
  auto it = slot_of_.find(site);
  return it == slot_of_.end() ? 0 : slots_[it->second].count;
}

std::vector<std::pair<Site, std::uint64_t>> PopulationState::occupied() const {
  std::vector<std::pair<Site, std::uint64_t>> out;
  out.reserve(slot_of_.size());
  for (const auto& [site, slot] : slot_of_) out.emplace_back(site, slots_[slot].count);
  std::sort(out.begin(), out.end());
  return out;
}

PopulationState::Event PopulationState::step(Rng& rng) {
  if (total_ == 0) throw EmptyPopulation("no particles left");
  const double rate_total = fenwick_total();
  const double dt = rng.next_exponential(rate_total);
  clock_ += dt;

  int slot = fenwick_find(rng.next_double() * rate_total);
  const Slot& s = slots_[slot];
  const Site site = s.site;

  Event ev;
  ev.site = site;
  ev.dt = dt;

  double u = rng.next_double() * s.unit_rate;
  for (const auto& [z, rate] : config_->kernel.jumps) {
    if (u < rate) {
      ev.kind = Event::Jump;
      ev.destination = add(site, z);
      ev.offspring = 0;
      add_particles(site, -1);
      add_particles(ev.destination, +1);
      return ev;
    }
    u -= rate;
  }

  // branch event at a source: pick n != 1 proportional to b_n
  const auto& src = config_->sources[source_at_.at(site).index];
  int chosen = 0;
  for (std::size_t n = 0; n < src.coeffs.size(); ++n) {
    if (n == 1) continue;
    chosen = static_cast<int>(n);
    if (u < src.coeffs[n]) break;
    u -= src.coeffs[n];
  }
  ev.kind = Event::Branch;
  ev.destination = site;
  ev.offspring = chosen;
  add_particles(site, static_cast<std::int64_t>(chosen) - 1);
  return ev;
}

SimulationRun run(const BRWConfig& config, std::uint64_t master_seed, std::uint64_t replica,
                  const SimOptions& options) {
  if (options.cap < 1) throw Error("cap must be >= 1");
  Rng rng = Rng::for_replica(master_seed, replica);
  PopulationState state(config, options.initial);

  SimulationRun result;
  result.master_seed = master_seed;
  result.replica = replica;
  const int S = std::max(2, options.snapshot_count);
  result.snapshot_times.resize(S);
  for (int k = 0; k < S; ++k)
    result.snapshot_times[k] = options.horizon * k / (S - 1);

  int next_snap = 0;
  while (true) {
    if (state.total() == 0) {
      result.outcome = Outcome::Extinct;
      result.final_time = state.clock();
      while (next_snap < S) result.totals.push_back(0), ++next_snap;
      break;
    }
    std::uint64_t prev_total = state.total();
    state.step(rng);
    // snapshots record the last state before t_k; the process is piecewise constant
    while (next_snap < S && result.snapshot_times[next_snap] < state.clock())
      result.totals.push_back(prev_total), ++next_snap;
    if (state.clock() >= options.horizon) {
      result.outcome = state.total() > 0 ? Outcome::Completed : Outcome::Extinct;
      result.final_time = state.clock();
      while (next_snap < S) result.totals.push_back(prev_total), ++next_snap;
      break;
    }
    if (state.total() > options.cap) {
      result.outcome = Outcome::CapHit;
      result.final_time = state.clock();
      break;
    }
  }

  result.final_counts = state.occupied();
  result.final_total = state.total();
  return result;
}

std::vector<SimulationRun> run_many(const BRWConfig& config, std::uint64_t master_seed,
                                    std::uint64_t replicas, const SimOptions& options,
                                    int threads) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  std::vector<SimulationRun> runs(replicas);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    while (true) {
      std::uint64_t r = next.fetch_add(1);
      if (r >= replicas) return;
      runs[r] = run(config, master_seed, r, options);
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return runs;
}

namespace {

double ols_slope(const std::vector<double>& ts, const std::vector<double>& ys) {
  double n = static_cast<double>(ts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sx += ts[i];
    sy += ys[i];
    sxx += ts[i] * ts[i];
    sxy += ts[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// censoring-aware replica mean of totals at each snapshot
std::vector<double> mean_curve(const std::vector<SimulationRun>& runs,
                               const std::vector<std::size_t>& which, std::size_t S) {
  std::vector<double> mean(S, 0.0);
  std::vector<std::size_t> alive(S, 0);
  for (std::size_t r : which) {
    const auto& totals = runs[r].totals;
    for (std::size_t k = 0; k < totals.size() && k < S; ++k) {
      mean[k] += static_cast<double>(totals[k]);
      ++alive[k];
    }
  }
  for (std::size_t k = 0; k < S; ++k)
    mean[k] = alive[k] > 0 ? mean[k] / static_cast<double>(alive[k]) : 0.0;
  return mean;
}

double slope_from_curve(const std::vector<double>& times, const std::vector<double>& mean) {
  const double T = times.back();
  std::vector<double> ts, ys;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] >= T / 2.0 && mean[k] > 0.0) {
      ts.push_back(times[k]);
      ys.push_back(std::log(mean[k]));
    }
  }
  if (ts.size() < 2) return 0.0;
  return ols_slope(ts, ys);
}

}  // namespace

EstimatorReport estimate(const BRWConfig& config, const std::vector<SimulationRun>& runs,
                         std::optional<double> lambda0) {
  if (runs.empty()) throw TooFewSurvivors("no runs");
  EstimatorReport report;
  const auto& times = runs[0].snapshot_times;
  const std::size_t S = times.size();
  report.snapshot_times = times;

  std::vector<std::size_t> all(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) all[i] = i;
  report.mean_totals = mean_curve(runs, all, S);
  report.lambda_hat = slope_from_curve(times, report.mean_totals);

  std::vector<std::size_t> survivors;
  std::size_t extinct = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].final_total > 0)
      survivors.push_back(i);
    else
      ++extinct;
  }
  report.survivors = survivors.size();
  report.extinction_fraction = static_cast<double>(extinct) / static_cast<double>(runs.size());
  if (survivors.size() < 100)
    throw TooFewSurvivors("fewer than 100 surviving replicas; CIs not valid");

  // size-weighted aggregate shares over survivors.  A plain mean of
  // per-replica shares is biased low: lineages still alive at T but headed
  // for extinction are small, off-source populations with near-zero share.
  // Weighting by population size suppresses them, and the aggregate ratio
  // estimates lim E[mu_T(y)] / E[mu_T].
  const Site x1 = config.sources[0].position;
  std::vector<double> num_x1, den;
  num_x1.reserve(survivors.size());
  den.reserve(survivors.size());
  double agg_total = 0.0;
  for (std::size_t r : survivors) {
    double total = static_cast<double>(runs[r].final_total);
    agg_total += total;
    double own = 0.0;
    for (const auto& [site, count] : runs[r].final_counts) {
      report.psi_hat[site] += static_cast<double>(count);
      if (site == x1) own = static_cast<double>(count);
    }
    num_x1.push_back(own);
    den.push_back(total);
  }
  for (auto& [site, v] : report.psi_hat) v /= agg_total;

  if (lambda0) {
    for (const auto& r : runs)
      report.xi_samples.push_back(static_cast<double>(r.final_total) *
                                  std::exp(-*lambda0 * r.final_time));
    for (int p = 1; p <= 4; ++p) {
      double m = 0.0;
      for (double xi : report.xi_samples) m += std::pow(xi, p);
      report.xi_moments.push_back(m / static_cast<double>(report.xi_samples.size()));
    }
  }

  // bootstrap percentile CIs over replicas
  const int B = 1000;
  Rng boot(0x5eedb007u ^ runs[0].master_seed);
  std::vector<double> lam_bs(B), psi_bs(B);
  for (int b = 0; b < B; ++b) {
    std::vector<std::size_t> sample(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i)
      sample[i] = static_cast<std::size_t>(boot.next_u64() % runs.size());
    lam_bs[b] = slope_from_curve(times, mean_curve(runs, sample, S));
    double acc_num = 0.0, acc_den = 0.0;
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      std::size_t pick = static_cast<std::size_t>(boot.next_u64() % survivors.size());
      acc_num += num_x1[pick];
      acc_den += den[pick];
    }
    psi_bs[b] = acc_num / acc_den;
  }
  std::sort(lam_bs.begin(), lam_bs.end());
  std::sort(psi_bs.begin(), psi_bs.end());
  report.lambda_ci_lo = lam_bs[static_cast<int>(0.025 * B)];
  report.lambda_ci_hi = lam_bs[static_cast<int>(0.975 * B)];
  report.psi_source_ci_lo = psi_bs[static_cast<int>(0.025 * B)];
  report.psi_source_ci_hi = psi_bs[static_cast<int>(0.975 * B)];
  return report;
}

}  // namespace brw
