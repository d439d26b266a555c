#include <doctest.h>

#include <cmath>

#include "brw/errors.hpp"
#include "brw/walk_kernel.hpp"

using namespace brw;

static TransitionKernel nn1d() {
  return validate_kernel({{{1, 0, 0}, 0.5}, {{-1, 0, 0}, 0.5}}, 1);
}

TEST_CASE("nearest-neighbour kernel validates and recomputes the diagonal") {
  TransitionKernel k = nn1d();
  CHECK(k.dim == 1);
  CHECK(k.jumps.size() == 2);
  CHECK(k.diagonal == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(k.jump_rate() == doctest::Approx(1.0));
}

TEST_CASE("symbol is cosine sum: phi(0) = 0, phi(pi) = -2 for NN d=1") {
  TransitionKernel k = nn1d();
  double zero = 0.0, pi = 3.14159265358979323846;
  CHECK(k.symbol(&zero) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(k.symbol(&pi) == doctest::Approx(-2.0).epsilon(1e-12));
  double half = pi / 2.0;
  CHECK(k.symbol(&half) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("asymmetric kernel is rejected naming the offset") {
  CHECK_THROWS_AS(validate_kernel({{{1, 0, 0}, 0.5}, {{-1, 0, 0}, 0.25}}, 1), AsymmetricKernel);
  // one-sided support is asymmetric too
  CHECK_THROWS_AS(validate_kernel({{{1, 0, 0}, 0.5}}, 1), AsymmetricKernel);
}

TEST_CASE("reducible support is rejected") {
  // jumps of +-2 only never reach odd sites
  CHECK_THROWS_AS(validate_kernel({{{2, 0, 0}, 0.5}, {{-2, 0, 0}, 0.5}}, 1), NotIrreducible);
}

TEST_CASE("empty support is rejected") {
  CHECK_THROWS_AS(validate_kernel({}, 1), EmptySupport);
}

TEST_CASE("2d kernel with both axes is irreducible") {
  TransitionKernel k = validate_kernel({{{1, 0, 0}, 0.25},
                                        {{-1, 0, 0}, 0.25},
                                        {{0, 1, 0}, 0.25},
                                        {{0, -1, 0}, 0.25}},
                                       2);
  CHECK(k.dim == 2);
  CHECK(k.jump_rate() == doctest::Approx(1.0));
}

TEST_CASE("branching source moments") {
  // b = (1, -3, 2): beta = 2*2 - 1*... = sum n b_n = -3 + 4 = 1
  BranchingSource s = make_source({0, 0, 0}, {1.0, -3.0, 2.0});
  CHECK(s.intensity == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.supercritical_flag);
  CHECK(s.factorial_moment(1) == doctest::Approx(1.0));
  CHECK(s.factorial_moment(2) == doctest::Approx(4.0));  // 2*1*b_2
  CHECK(s.factorial_moment(3) == doctest::Approx(0.0));
}

TEST_CASE("coefficient validation: sign pattern and zero sum") {
  CHECK_THROWS_AS(make_source({0, 0, 0}, {1.0, -3.0, 2.5}), InvalidCoefficients);  // sum != 0
  CHECK_THROWS_AS(make_source({0, 0, 0}, {-1.0, 0.0, 1.0}), InvalidCoefficients);  // b_0 < 0
  CHECK_THROWS_AS(make_source({0, 0, 0}, {0.0, 1.0, -1.0}), InvalidCoefficients);  // b_1 > 0
}

TEST_CASE("config rejects duplicate source positions") {
  TransitionKernel k = nn1d();
  BranchingSource a = make_source({0, 0, 0}, {0.0, -1.0, 1.0});
  BranchingSource b = make_source({0, 0, 0}, {0.0, -2.0, 2.0});
  CHECK_THROWS(make_config(k, {a, b}));
  BranchingSource c = make_source({1, 0, 0}, {0.0, -2.0, 2.0});
  BRWConfig cfg = make_config(k, {a, c});
  CHECK(cfg.source_count() == 2);
}
