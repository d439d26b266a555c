#include <doctest.h>

#include <cmath>

#include "brw/errors.hpp"
#include "brw/moments.hpp"

using namespace brw;

static BRWConfig reference() {
  TransitionKernel k = validate_kernel({{{1, 0, 0}, 0.5}, {{-1, 0, 0}, 0.5}}, 1);
  return make_config(k, {make_source({0, 0, 0}, {1.0, -3.0, 2.0})});
}

TEST_CASE("composition sums: frozen small values") {
  CHECK(comp_sum(1, 1) == 1);
  CHECK(comp_sum(2, 2) == 1);
  CHECK(comp_sum(3, 2) == 8);   // 1^1 2^2 + 2^2 1^1
  CHECK(comp_sum(4, 2) == 70);  // 27 + 16 + 27
  CHECK(comp_sum(6, 1) == 46656);
  CHECK(comp_sum(5, 5) == 1);
  for (int n = 1; n <= 8; ++n) {
    BigInt nn = 1;
    for (int i = 0; i < n; ++i) nn *= n;
    CHECK(comp_sum(n, 1) == nn);
    CHECK(comp_sum(n, n) == 1);
  }
}

TEST_CASE("composition sums agree with brute-force enumeration") {
  for (int n = 1; n <= 10; ++n)
    for (int r = 1; r <= n; ++r) CHECK(comp_sum(n, r) == comp_sum_bruteforce(n, r));
}

TEST_CASE("combinatorial bound and threshold constants") {
  BoundReport report = check_bounds(150);
  CHECK(report.violations == 0);
  CHECK(report.n1 == 10);
  CHECK(report.n2 == 106);
  CHECK(report.n3 == 7);
  CHECK(report.n_tilde == 106);
  CHECK(report.min_constant > 0.0);
  CHECK(report.min_constant < 6.0);
}

TEST_CASE("check_bounds guards its range") {
  CHECK_THROWS_AS(check_bounds(301), TooLarge);
}

TEST_CASE("g_eval: binary branching closed form") {
  // b = (1,-3,2): beta^(2) = 4, all higher factorial moments vanish, so
  // g_k(v) = (beta^(2)/2) sum_{i=1}^{k-1} C(k,i) v_i v_{k-i}
  BranchingSource s = make_source({0, 0, 0}, {1.0, -3.0, 2.0});
  CHECK(g_eval(s, 2, {1.5}) == doctest::Approx(4.0 * 1.5 * 1.5 / 2.0 * 2.0).epsilon(1e-12));
  // k = 3: 2 * (C(3,1) v1 v2 + C(3,2) v2 v1) = 2 * 6 v1 v2
  CHECK(g_eval(s, 3, {2.0, 5.0}) == doctest::Approx(2.0 * 6.0 * 2.0 * 5.0).epsilon(1e-12));
}

TEST_CASE("moment table: C_1 closed forms and factorization") {
  BRWConfig cfg = reference();
  SpectralResult sp = analyze(cfg, 14);
  REQUIRE(sp.supercritical());
  MomentTable table = moment_constants(cfg, sp, 6, 3, 100);

  const double lam = *sp.lambda0;
  double beta_f = cfg.sources[0].intensity * sp.f_sources(0);
  for (int x = -3; x <= 3; ++x) {
    Site sx = {x, 0, 0};
    CHECK(table.C_x.at({1, sx}) ==
          doctest::Approx(sp.f_extended.at(sx) * beta_f / lam).epsilon(1e-10));
  }
  // C_n(x,y) = psi(y)^n C_n(x)
  for (int n = 1; n <= 6; ++n)
    for (int x : {-1, 0, 2})
      for (int y : {0, 1, 3}) {
        double lhs = table.C_xy.at({n, {x, 0, 0}, {y, 0, 0}});
        double rhs = std::pow(psi(cfg, sp, {y, 0, 0}), n) * table.C_x.at({n, {x, 0, 0}});
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
      }
  CHECK(table.n_star >= 1);
  CHECK(table.d_bound_margin >= 0.0);
}

TEST_CASE("moment constants are positive and grow") {
  BRWConfig cfg = reference();
  SpectralResult sp = analyze(cfg, 14);
  MomentTable table = moment_constants(cfg, sp, 8, 1, 100);
  double prev = 0.0;
  for (int n = 1; n <= 8; ++n) {
    double c = table.C_x.at({n, {0, 0, 0}});
    CHECK(c > 0.0);
    CHECK(c > prev);  // factorial-type growth dominates quickly
    prev = c;
  }
}

TEST_CASE("Carleman diagnostic on the reference configuration") {
  BRWConfig cfg = reference();
  SpectralResult sp = analyze(cfg, 14);
  MomentTable table = moment_constants(cfg, sp, 20, 1, 100);
  CarlemanReport r = carleman_diag(table, {0, 0, 0});
  REQUIRE(r.m.size() == 20);
  CHECK(r.bound_holds);
  CHECK(r.sums_increasing);
  CHECK(r.divergent_verdict);
  CHECK(r.lower_scale > 0.0);
  for (std::size_t i = 1; i < r.partial_sums.size(); ++i)
    CHECK(r.partial_sums[i] > r.partial_sums[i - 1]);
}

TEST_CASE("Duhamel integral-equation residual is small") {
  double res = duhamel_check(reference(), {0.0, 0.5, 1.0, 2.0}, {0, 0, 0}, 120);
  CHECK(res < 1e-6);
}
