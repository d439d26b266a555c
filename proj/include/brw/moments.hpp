#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

#include "brw/spectral.hpp"
#include "brw/walk_kernel.hpp"

namespace brw {

using BigInt = boost::multiprecision::cpp_int;

// f(n,r) = sum over positive compositions i_1 + ... + i_r = n of
// i_1^{i_1} ... i_r^{i_r}, exact.  Memoized recursion
// f(n,r) = sum_u u^u f(n-u, r-1), f(n,1) = n^n, f(n,n) = 1.
BigInt comp_sum(int n, int r);

// Direct enumeration of all compositions; oracle for comp_sum.  n <= 25.
BigInt comp_sum_bruteforce(int n, int r);

struct BoundReport {
  int n_max = 0;
  int violations = 0;            // of f(n,r) < 6 (n-1)^{n-1}
  double min_constant = 0.0;     // smallest C with f(n,r) < C n^n / r^{r-1}, n <= 50
  int n1 = 0, n2 = 0, n3 = 0;    // thresholds from which each defining inequality fails
  int n_tilde = 0;               // max{n1, n2, n3}
};

// Exact verification of the combinatorial bounds up to n_max (<= 300) and
// recomputation of the threshold constants.
BoundReport check_bounds(int n_max);

// g_k^{(j)}(v_1, ..., v_{k-1}) =
//   sum_{r=2}^{k} beta_j^{(r)}/r! sum_{i_1+...+i_r=k} k!/(i_1!...i_r!) v_{i_1}...v_{i_r}.
double g_eval(const BranchingSource& source, int k, const std::vector<double>& values);

// D_n^{(j)}(x) = ((n lambda0 I - H_R)^{-1} delta_{x_j})(x) on the truncated box.
double resolvent_D(const BRWConfig& config, double lambda0, int n, int source_index,
                   const Site& x, int R);

struct MomentTable {
  int n_max = 0;
  double lambda0 = 0.0;
  std::map<std::tuple<int, Site, Site>, double> C_xy;  // (n, x, y) -> C_n(x,y)
  std::map<std::pair<int, Site>, double> C_x;          // (n, x) -> C_n(x)
  std::map<std::tuple<int, int, Site>, double> D;      // (n, j, x) -> D_n^{(j)}(x)
  int n_star = 0;                                      // ceil(2 ||H_R|| / lambda0)
  double d_bound_margin = 0.0;  // min over n >= n_star of 2/(n lambda0) - |D|
  double growth_gamma = 0.0;    // measured envelope constant
  double growth_E = 0.0;        // minimal E in the envelope definition
  bool growth_envelope_ok = false;
};

// C_1 from the closed formulas, then C_n for 2 <= n <= n_max by the
// recursion C_n = sum_j g_n^{(j)}(C_1..C_{n-1} at x_j) D_n^{(j)}.
// x and y range over the cube of radius `window` around the origin.
MomentTable moment_constants(const BRWConfig& config, const SpectralResult& spectral, int n_max,
                             int window, int R);

struct CarlemanReport {
  std::vector<double> m;             // m(n,x) = C_n(x)/C_1(x)^n, n = 1..n_max
  std::vector<double> partial_sums;  // partial sums of m(n,x)^{-1/2n}
  double lower_scale = 0.0;          // sqrt(2 C_1(x) / gamma)
  bool bound_holds = true;           // m(n,x)^{-1/2n} >= lower_scale/(n+1) for all n
  bool sums_increasing = true;
  bool divergent_verdict = false;
};

// Carleman divergence diagnostic for the moment sequence at x.
CarlemanReport carleman_diag(const MomentTable& table, const Site& x);

// Max residual of the integral equation
// m_1(t,x) = 1 + sum_j beta_j int_0^t m_1(s,x,x_j) ds
// over the t-grid, with both sides computed from the truncated operator.
double duhamel_check(const BRWConfig& config, const std::vector<double>& t_grid, const Site& x,
                     int R);

}  // namespace brw
