#include "brw/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "brw/errors.hpp"
#include "brw/green.hpp"

namespace brw {

namespace {

BigInt int_pow(long long base, int exp) {
  BigInt b = base, r = 1;
  for (int i = 0; i < exp; ++i) r *= b;
  return r;
}

std::map<std::pair<int, int>, BigInt>& comp_sum_memo() {
  static std::map<std::pair<int, int>, BigInt> memo;
  return memo;
}
std::mutex comp_sum_mutex;

BigInt comp_sum_impl(int n, int r) {
  if (r == 1) return int_pow(n, n);
  if (r == n) return 1;
  auto key = std::make_pair(n, r);
  auto it = comp_sum_memo().find(key);
  if (it != comp_sum_memo().end()) return it->second;
  BigInt sum = 0;
  for (int u = 1; u <= n - r + 1; ++u) sum += int_pow(u, u) * comp_sum_impl(n - u, r - 1);
  comp_sum_memo().emplace(key, sum);
  return sum;
}

}  // namespace

BigInt comp_sum(int n, int r) {
  if (n < 1 || r < 1 || r > n) throw OutOfRange("comp_sum requires 1 <= r <= n");
  std::lock_guard<std::mutex> lock(comp_sum_mutex);
  return comp_sum_impl(n, r);
}

BigInt comp_sum_bruteforce(int n, int r) {
  if (n < 1 || r < 1 || r > n) throw OutOfRange("comp_sum requires 1 <= r <= n");
  if (n > 25) throw TooLarge("brute-force enumeration limited to n <= 25");
  BigInt total = 0;
  // enumerate positive compositions of n into r parts
  std::vector<int> parts(r, 1);
  auto rec = [&](auto&& self, int pos, int remaining, BigInt prod) -> void {
    if (pos == r - 1) {
      total += prod * int_pow(remaining, remaining);
      return;
    }
    for (int i = 1; i <= remaining - (r - 1 - pos); ++i)
      self(self, pos + 1, remaining - i, prod * int_pow(i, i));
  };
  rec(rec, 0, n, 1);
  return total;
}

BoundReport check_bounds(int n_max) {
  if (n_max > 300) throw TooLarge("check_bounds limited to n_max <= 300");
  BoundReport report;
  report.n_max = n_max;

  for (int n = 2; n <= n_max; ++n) {
    BigInt bound = 6 * int_pow(n - 1, n - 1);
    for (int r = 2; r <= n; ++r)
      if (comp_sum(n, r) >= bound) ++report.violations;
  }

  double min_c = 0.0;
  for (int n = 2; n <= std::min(n_max, 50); ++n)
    for (int r = 2; r <= n; ++r) {
      BigInt num = comp_sum(n, r) * int_pow(r, r - 1);
      double ratio = num.convert_to<double>() / int_pow(n, n).convert_to<double>();
      min_c = std::max(min_c, ratio);
    }
  report.min_constant = min_c;

  // The proof needs, for every n past the threshold, the failure of each
  // defining inequality; each n_i is therefore the first n from which the
  // inequality fails for all larger n.
  int last1 = 0, last2 = 0, last3 = 0;
  for (int n = 6; n <= 500; ++n)
    if (int_pow(6, 6) * int_pow(n - 5, n - 5) >= int_pow(4, 4) * int_pow(n - 3, n - 3))
      last1 = n;
  for (int n = 3; n <= 500; ++n)
    if (283 * int_pow(n - 2, n - 2) >= int_pow(n - 1, n - 1)) last2 = n;
  for (int n = 2; n <= 500; ++n)
    if ((n - 1) * (std::log(n + 1.0) - std::log(n - 1.0)) <= std::log(2.0) + 1.0) last3 = n;
  report.n1 = last1 + 1;
  report.n2 = last2 + 1;
  report.n3 = last3 + 1;
  report.n_tilde = std::max({report.n1, report.n2, report.n3});
  return report;
}

double g_eval(const BranchingSource& source, int k, const std::vector<double>& values) {
  if (k < 2) throw OutOfRange("g_eval requires k >= 2");
  if (k > 30) throw TooLarge("g_eval limited to k <= 30");
  if (static_cast<int>(values.size()) < k - 1)
    throw OutOfRange("g_eval needs v_1 ... v_{k-1}");

  // The composition sum for fixed r equals k! [z^k] P(z)^r with
  // P(z) = sum_{i=1}^{k-1} v_i z^i / i!.
  std::vector<double> P(k + 1, 0.0);
  double fact = 1.0;
  for (int i = 1; i <= k - 1; ++i) {
    fact *= i;
    P[i] = values[i - 1] / fact;
  }
  double k_fact = 1.0;
  for (int i = 2; i <= k; ++i) k_fact *= i;

  std::vector<double> Q = P;  // P^r, truncated at degree k
  double result = 0.0;
  double r_fact = 1.0;
  for (int r = 2; r <= k; ++r) {
    r_fact *= r;
    std::vector<double> next(k + 1, 0.0);
    for (int a = r - 1; a <= k; ++a)
      for (int b = 1; a + b <= k; ++b) next[a + b] += Q[a] * P[b];
    Q = std::move(next);
    double beta_r = source.factorial_moment(r);
    if (beta_r != 0.0) result += beta_r / r_fact * k_fact * Q[k];
  }
  return result;
}

double resolvent_D(const BRWConfig& config, double lambda0, int n, int source_index,
                   const Site& x, int R) {
  if (n < 2) throw OutOfRange("resolvent_D requires n >= 2");
  TruncatedOperator op = TruncatedOperator::evolution(config, R);
  if (!op.box.contains(x)) throw PointOutsideBox("point outside truncated box");
  Eigen::MatrixXd M =
      n * lambda0 * Eigen::MatrixXd::Identity(op.matrix.rows(), op.matrix.cols()) - op.matrix;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(op.matrix.rows());
  rhs(op.box.index(config.sources[source_index].position)) = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw SingularSystem("shifted operator not positive definite");
  Eigen::VectorXd u = llt.solve(rhs);
  return u(op.box.index(x));
}

MomentTable moment_constants(const BRWConfig& config, const SpectralResult& spectral, int n_max,
                             int window, int R) {
  if (!spectral.supercritical()) throw NotSupercritical("moment constants need lambda0 > 0");
  if (n_max < 1) throw OutOfRange("n_max must be >= 1");
  const double lambda0 = *spectral.lambda0;
  const int N = config.source_count();

  MomentTable table;
  table.n_max = n_max;
  table.lambda0 = lambda0;

  Box win(config.kernel.dim, window);
  std::vector<Site> points;
  for (std::size_t i = 0; i < win.size(); ++i) points.push_back(win.site(i));

  auto f_at = [&](const Site& x) -> double {
    auto it = spectral.f_extended.find(x);
    if (it != spectral.f_extended.end()) return it->second;
    double v = 0.0;
    for (int j = 0; j < N; ++j)
      v += config.sources[j].intensity * spectral.f_sources(j) *
           green_value(config.kernel, sub(config.sources[j].position, x), lambda0);
    return v;
  };

  double beta_f = 0.0;
  for (int j = 0; j < N; ++j) beta_f += config.sources[j].intensity * spectral.f_sources(j);

  // closed formulas for n = 1
  for (const Site& x : points) {
    double fx = f_at(x);
    table.C_x[{1, x}] = fx * beta_f / lambda0;
    for (const Site& y : points) table.C_xy[{1, x, y}] = f_at(y) * fx;
  }
  // source-point tables drive the recursion
  std::vector<std::vector<double>> Cx_src(n_max + 1, std::vector<double>(N, 0.0));
  // Cxy_src[n][j][y-index]
  std::vector<std::vector<std::vector<double>>> Cxy_src(
      n_max + 1, std::vector<std::vector<double>>(N, std::vector<double>(points.size(), 0.0)));
  for (int j = 0; j < N; ++j) {
    double fj = spectral.f_sources(j);
    Cx_src[1][j] = fj * beta_f / lambda0;
    for (std::size_t yi = 0; yi < points.size(); ++yi)
      Cxy_src[1][j][yi] = f_at(points[yi]) * fj;
  }

  TruncatedOperator op = TruncatedOperator::evolution(config, R);
  table.n_star = static_cast<int>(std::ceil(2.0 * op.spectral_norm() / lambda0));

  const Eigen::MatrixXd identity =
      Eigen::MatrixXd::Identity(op.matrix.rows(), op.matrix.cols());
  double margin = std::numeric_limits<double>::infinity();
  bool margin_seen = false;

  for (int n = 2; n <= n_max; ++n) {
    Eigen::LLT<Eigen::MatrixXd> llt(n * lambda0 * identity - op.matrix);
    if (llt.info() != Eigen::Success)
      throw SingularSystem("shifted operator not positive definite");

    // D_n^{(j)} at all window points and source points
    std::vector<Eigen::VectorXd> D_n(N);
    for (int j = 0; j < N; ++j) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(op.matrix.rows());
      rhs(op.box.index(config.sources[j].position)) = 1.0;
      D_n[j] = llt.solve(rhs);
    }
    auto D_at = [&](int j, const Site& x) { return D_n[j](op.box.index(x)); };

    std::vector<double> g_total(N);
    std::vector<std::vector<double>> g_local(N, std::vector<double>(points.size()));
    for (int j = 0; j < N; ++j) {
      std::vector<double> args(n - 1);
      for (int i = 1; i < n; ++i) args[i - 1] = Cx_src[i][j];
      g_total[j] = g_eval(config.sources[j], n, args);
      for (std::size_t yi = 0; yi < points.size(); ++yi) {
        for (int i = 1; i < n; ++i) args[i - 1] = Cxy_src[i][j][yi];
        g_local[j][yi] = g_eval(config.sources[j], n, args);
      }
    }

    for (int jj = 0; jj < N; ++jj) {
      for (int j = 0; j < N; ++j) {
        double d = D_at(j, config.sources[jj].position);
        Cx_src[n][jj] += g_total[j] * d;
        for (std::size_t yi = 0; yi < points.size(); ++yi)
          Cxy_src[n][jj][yi] += g_local[j][yi] * d;
      }
    }

    for (const Site& x : points) {
      double cx = 0.0;
      for (int j = 0; j < N; ++j) {
        double d = D_at(j, x);
        table.D[{n, j, x}] = d;
        cx += g_total[j] * d;
        if (n >= table.n_star) {
          margin = std::min(margin, 2.0 / (n * lambda0) - std::abs(d));
          margin_seen = true;
        }
      }
      table.C_x[{n, x}] = cx;
      for (std::size_t yi = 0; yi < points.size(); ++yi) {
        double cxy = 0.0;
        for (int j = 0; j < N; ++j) cxy += g_local[j][yi] * D_at(j, x);
        table.C_xy[{n, x, points[yi]}] = cxy;
      }
    }
  }
  // no n >= n_star in range: the bound is vacuous, report +inf margin
  table.d_bound_margin = margin_seen ? margin : std::numeric_limits<double>::infinity();

  // measured growth envelope C_n(x) <= gamma^{n-1} n! n^n
  {
    // x1 = source with the largest C_1
    int j1 = 0;
    for (int j = 1; j < N; ++j)
      if (Cx_src[1][j] > Cx_src[1][j1]) j1 = j;
    double C_comb = check_bounds(std::min(50, std::max(10, n_max))).min_constant;
    double D_const = 0.0;
    for (int j = 0; j < N; ++j) {
      const auto& src = config.sources[j];
      for (int r = 2; r < static_cast<int>(src.coeffs.size()); ++r) {
        double fr = 1.0;
        for (int i = 2; i <= r; ++i) fr *= i;
        double denom = fr * std::pow(static_cast<double>(r), r - 1);
        D_const = std::max(D_const, src.factorial_moment(r) / denom);
      }
    }
    double beta2 = config.sources[j1].factorial_moment(2);
    double K = 2.0 * N * C_comb * D_const * (lambda0 * beta2 / 2.0) * Cx_src[1][j1] *
               Cx_src[1][j1];
    double E = 1e-12;
    int basis_top = std::min(n_max, std::max(table.n_star, 2));
    for (int n = 2; n <= basis_top; ++n) {
      double nf = 1.0;
      for (int i = 2; i <= n; ++i) nf *= i;
      double target = std::pow(Cx_src[n][j1] / (nf * std::pow(static_cast<double>(n), n)),
                               1.0 / (n - 1));
      if (K > 0.0) E = std::max(E, target / K);
    }
    table.growth_E = E;
    table.growth_gamma = K * E;
    bool ok = true;
    for (int n = 1; n <= n_max && ok; ++n) {
      double nf = 1.0;
      for (int i = 2; i <= n; ++i) nf *= i;
      double envelope = std::pow(table.growth_gamma, n - 1) * nf *
                        std::pow(static_cast<double>(n), n);
      for (const Site& x : points)
        if (table.C_x.at({n, x}) > envelope * (1.0 + 1e-9)) ok = false;
    }
    table.growth_envelope_ok = ok;
  }

  return table;
}

CarlemanReport carleman_diag(const MomentTable& table, const Site& x) {
  if (table.n_max < 10) throw OutOfRange("carleman diagnostic needs n_max >= 10");
  CarlemanReport report;
  double c1 = table.C_x.at({1, x});
  report.lower_scale = std::sqrt(2.0 * c1 / table.growth_gamma);

  double sum = 0.0, prev_sum = -1.0;
  for (int n = 1; n <= table.n_max; ++n) {
    double m = table.C_x.at({n, x}) / std::pow(c1, n);
    report.m.push_back(m);
    double term = std::pow(m, -1.0 / (2.0 * n));
    sum += term;
    report.partial_sums.push_back(sum);
    if (term < report.lower_scale / (n + 1) * (1.0 - 1e-12)) report.bound_holds = false;
    if (sum <= prev_sum) report.sums_increasing = false;
    prev_sum = sum;
  }
  report.divergent_verdict = report.bound_holds && report.sums_increasing;
  return report;
}

double duhamel_check(const BRWConfig& config, const std::vector<double>& t_grid, const Site& x,
                     int R) {
  double t_max = 0.0;
  for (double t : t_grid) t_max = std::max(t_max, t);

  HeatSolver walk_solver(TruncatedOperator::walk(config.kernel, R));
  {
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(walk_solver.box().size());
    Eigen::VectorXd mass = walk_solver.apply(t_max, ones);
    double leaked = 1.0 - mass(walk_solver.box().index(x));
    if (leaked > 1e-9) throw HorizonTooLong("boundary leakage exceeds 1e-9 at the horizon");
  }
  HeatSolver solver(TruncatedOperator::evolution(config, R));
  const Box& box = solver.box();
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(box.size());

  double max_residual = 0.0;
  for (double t : t_grid) {
    double lhs = solver.apply(t, ones)(box.index(x));
    // composite trapezoid in s, step halved until the quadrature settles
    auto rhs_at = [&](int steps) {
      double integral_total = 1.0;
      for (int j = 0; j < config.source_count(); ++j) {
        double integral = 0.0;
        const Site& xj = config.sources[j].position;
        for (int i = 0; i <= steps; ++i) {
          double s = t * i / steps;
          double w = (i == 0 || i == steps) ? 0.5 : 1.0;
          integral += w * solver.kernel_entry(s, x, xj);
        }
        integral_total += config.sources[j].intensity * integral * (t / steps);
      }
      return integral_total;
    };
    double rhs;
    if (t == 0.0) {
      rhs = 1.0;
    } else {
      int steps = 32;
      rhs = rhs_at(steps);
      while (steps < 4096) {
        steps *= 2;
        double next = rhs_at(steps);
        if (std::abs(next - rhs) < 1e-8) {
          rhs = next;
          break;
        }
        rhs = next;
      }
    }
    max_residual = std::max(max_residual, std::abs(lhs - rhs));
  }
  return max_residual;
}

}  // namespace brw
