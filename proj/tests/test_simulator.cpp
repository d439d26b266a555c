#include <doctest.h>

#include <cmath>

#include "brw/errors.hpp"
#include "brw/simulator.hpp"
#include "brw/spectral.hpp"

using namespace brw;

static BRWConfig reference() {
  TransitionKernel k = validate_kernel({{{1, 0, 0}, 0.5}, {{-1, 0, 0}, 0.5}}, 1);
  return make_config(k, {make_source({0, 0, 0}, {1.0, -3.0, 2.0})});
}

TEST_CASE("rng streams are deterministic and replica-independent") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng r0 = Rng::for_replica(1, 0);
  Rng r1 = Rng::for_replica(1, 1);
  CHECK(r0.next_u64() != r1.next_u64());

  Rng u(7);
  for (int i = 0; i < 1000; ++i) {
    double x = u.next_double();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(u.next_exponential(2.0) > 0.0);
  }
}

TEST_CASE("population state: rates and single steps") {
  BRWConfig cfg = reference();
  PopulationState st(cfg, {0, 0, 0});
  CHECK(st.total() == 1);
  // one particle at the source: jump rate 1 + branch rate |b_1| = 3
  CHECK(st.total_rate() == doctest::Approx(4.0).epsilon(1e-12));

  Rng rng(5);
  PopulationState::Event ev = st.step(rng);
  CHECK(ev.dt > 0.0);
  CHECK(st.clock() == doctest::Approx(ev.dt));
  if (ev.kind == PopulationState::Event::Jump) {
    CHECK(st.total() == 1);
    CHECK(st.count_at(ev.destination) == 1);
    // off the source only the walk contributes
    CHECK(st.total_rate() == doctest::Approx(1.0).epsilon(1e-12));
  } else {
    CHECK((ev.offspring == 0 || ev.offspring == 2));
    CHECK(st.total() == static_cast<std::uint64_t>(ev.offspring));
  }
}

TEST_CASE("event rates tally over many steps") {
  // with one particle pinned at the source, the first event splits
  // jump/branch as 1:3; check the empirical fraction
  BRWConfig cfg = reference();
  Rng rng(99);
  int branches = 0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    PopulationState st(cfg, {0, 0, 0});
    if (st.step(rng).kind == PopulationState::Event::Branch) ++branches;
  }
  double frac = static_cast<double>(branches) / trials;
  CHECK(frac == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("runs are reproducible for a fixed (seed, replica)") {
  BRWConfig cfg = reference();
  SimOptions opts;
  opts.horizon = 5.0;
  SimulationRun a = run(cfg, 123, 7, opts);
  SimulationRun b = run(cfg, 123, 7, opts);
  CHECK(a.final_total == b.final_total);
  CHECK(a.final_time == doctest::Approx(b.final_time));
  REQUIRE(a.totals.size() == b.totals.size());
  for (std::size_t i = 0; i < a.totals.size(); ++i) CHECK(a.totals[i] == b.totals[i]);
}

TEST_CASE("run_many is deterministic across thread counts") {
  BRWConfig cfg = reference();
  SimOptions opts;
  opts.horizon = 3.0;
  std::vector<SimulationRun> serial = run_many(cfg, 9, 50, opts, 1);
  std::vector<SimulationRun> parallel = run_many(cfg, 9, 50, opts, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].replica == parallel[i].replica);
    CHECK(serial[i].final_total == parallel[i].final_total);
  }
}

TEST_CASE("population cap censors a run") {
  BRWConfig cfg = reference();
  SimOptions opts;
  opts.horizon = 40.0;
  opts.cap = 50;
  // with lambda0 ~ 0.41 a long horizon overflows a 50-particle cap on
  // surviving runs; find one
  bool saw_cap = false, saw_extinct = false;
  for (std::uint64_t rep = 0; rep < 40 && !(saw_cap && saw_extinct); ++rep) {
    SimulationRun r = run(cfg, 2024, rep, opts);
    if (r.outcome == Outcome::CapHit) {
      saw_cap = true;
      CHECK(r.final_total >= 50);
      CHECK(r.final_time < opts.horizon);
      CHECK(r.totals.size() < r.snapshot_times.size());  // censored tail
    }
    if (r.outcome == Outcome::Extinct) {
      saw_extinct = true;
      CHECK(r.final_total == 0);
    }
  }
  CHECK(saw_cap);
  CHECK(saw_extinct);
}

TEST_CASE("estimator recovers the growth rate on a medium run set") {
  BRWConfig cfg = reference();
  double lam = *find_lambda0(cfg).lambda0;
  SimOptions opts;
  opts.horizon = 15.0;
  opts.cap = 200000;
  std::vector<SimulationRun> runs = run_many(cfg, 31, 1500, opts, 0);
  EstimatorReport est = estimate(cfg, runs, lam);
  CHECK(est.survivors >= 100);
  CHECK(est.extinction_fraction > 0.0);
  CHECK(est.extinction_fraction < 1.0);
  // loose tolerance: short horizon, moderate replica count
  CHECK(std::abs(est.lambda_hat - lam) / lam < 0.15);
  CHECK(est.lambda_ci_lo <= est.lambda_hat);
  CHECK(est.lambda_hat <= est.lambda_ci_hi);
  double share_sum = 0.0;
  for (const auto& [site, share] : est.psi_hat) share_sum += share;
  CHECK(share_sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(est.xi_moments.size() == 4);
  CHECK(est.xi_moments[0] > 0.0);
}

TEST_CASE("estimator refuses tiny survivor sets") {
  BRWConfig cfg = reference();
  SimOptions opts;
  opts.horizon = 2.0;
  std::vector<SimulationRun> runs = run_many(cfg, 77, 50, opts, 1);
  CHECK_THROWS_AS(estimate(cfg, runs, std::nullopt), TooFewSurvivors);
}
