#include <doctest.h>

#include <cmath>

#include "brw/errors.hpp"
#include "brw/green.hpp"

using namespace brw;

static TransitionKernel nn1d() {
  return validate_kernel({{{1, 0, 0}, 0.5}, {{-1, 0, 0}, 0.5}}, 1);
}

// closed form for the NN walk: I_0(lambda) = 1/sqrt(lambda^2 + 2 lambda),
// I_x = I_0 r^|x| with r = 1 + lambda - sqrt(lambda^2 + 2 lambda)
TEST_CASE("Green's function matches the 1d closed form") {
  TransitionKernel k = nn1d();
  CHECK(green_value(k, {0, 0, 0}, 1.0) == doctest::Approx(0.5773502691896258).epsilon(1e-10));
  CHECK(green_value(k, {0, 0, 0}, 0.5) == doctest::Approx(0.8944271909999159).epsilon(1e-10));
  double r = 2.0 - std::sqrt(3.0);
  for (int x = 1; x <= 5; ++x) {
    double expected = 0.5773502691896258 * std::pow(r, x);
    CHECK(green_value(k, {x, 0, 0}, 1.0) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(green_value(k, {-x, 0, 0}, 1.0) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("Green's function requires lambda > 0") {
  TransitionKernel k = nn1d();
  CHECK_THROWS_AS(green_value(k, {0, 0, 0}, 0.0), LambdaNonpositive);
  CHECK_THROWS_AS(green_value(k, {0, 0, 0}, -1.0), LambdaNonpositive);
}

TEST_CASE("resolvent oracle agrees with quadrature") {
  TransitionKernel k = nn1d();
  for (double lambda : {0.25, 1.0, 3.0})
    for (int x : {0, 1, 3}) {
      double quad = green_value(k, {x, 0, 0}, lambda);
      double res = resolvent_green(k, {x, 0, 0}, lambda, 400);
      CHECK(quad == doctest::Approx(res).epsilon(1e-8));
    }
}

TEST_CASE("truncated heat kernel matches the Bessel closed form") {
  // p(t,0,0) = e^{-t} I_0(t) for the NN walk; frozen at t = 1
  TransitionKernel k = nn1d();
  CHECK(truncated_heat(k, 60, 1.0, {0, 0, 0}, {0, 0, 0}) ==
        doctest::Approx(0.4657596075936405).epsilon(1e-10));
}

TEST_CASE("heat kernel leakage guard fires for long horizons on a small box") {
  TransitionKernel k = nn1d();
  CHECK_THROWS_AS(truncated_heat(k, 4, 50.0, {0, 0, 0}, {0, 0, 0}), HorizonTooLong);
}

TEST_CASE("evolution operator adds source potentials on the diagonal") {
  TransitionKernel k = nn1d();
  BRWConfig cfg = make_config(k, {make_source({0, 0, 0}, {1.0, -3.0, 2.0})});
  TruncatedOperator walk = TruncatedOperator::walk(k, 5);
  TruncatedOperator evo = TruncatedOperator::evolution(cfg, 5);
  std::size_t origin = evo.box.index({0, 0, 0});
  CHECK(evo.matrix(origin, origin) ==
        doctest::Approx(walk.matrix(origin, origin) + 1.0).epsilon(1e-14));
  // off the source the operators coincide
  std::size_t other = evo.box.index({2, 0, 0});
  CHECK(evo.matrix(other, other) == doctest::Approx(walk.matrix(other, other)).epsilon(1e-14));
  CHECK((evo.matrix - evo.matrix.transpose()).norm() == doctest::Approx(0.0));
}

TEST_CASE("recurrence probe: 1d walk is recurrent, 3d walk is transient") {
  RecurrenceProbe p1 = probe_g0(nn1d());
  CHECK_FALSE(p1.g0_finite);

  TransitionKernel k3 = validate_kernel({{{1, 0, 0}, 1.0 / 6}, {{-1, 0, 0}, 1.0 / 6},
                                         {{0, 1, 0}, 1.0 / 6}, {{0, -1, 0}, 1.0 / 6},
                                         {{0, 0, 1}, 1.0 / 6}, {{0, 0, -1}, 1.0 / 6}},
                                        3);
  RecurrenceProbe p3 = probe_g0(k3);
  CHECK(p3.g0_finite);
  REQUIRE(p3.g0_estimate.has_value());
  // Watson integral for the simple random walk on Z^3
  CHECK(*p3.g0_estimate == doctest::Approx(1.5163860591519780).epsilon(2e-2));
}
