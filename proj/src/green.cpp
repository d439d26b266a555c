#include "brw/green.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "brw/errors.hpp"

namespace brw {

namespace {

int max_nodes_for_dim(int dim) {
  switch (dim) {
    case 1: return 1 << 17;
    case 2: return 1 << 12;
    default: return 1 << 8;
  }
}

// One pass of the K^d-node periodic trapezoid rule.  On the torus the rule
// reduces to the plain mean of the integrand over the uniform grid.
double trapezoid_pass(const TransitionKernel& kernel, const Site& x, double lambda, int K) {
  const int d = kernel.dim;
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> theta_axis(K);
  for (int k = 0; k < K; ++k) theta_axis[k] = -std::numbers::pi + two_pi * k / K;

  double sum = 0.0;
  std::array<int, kMaxDim> idx{0, 0, 0};
  double theta[kMaxDim] = {0, 0, 0};
  const std::size_t total = [&] {
    std::size_t n = 1;
    for (int i = 0; i < d; ++i) n *= K;
    return n;
  }();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int i = d - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(rem % K);
      rem /= K;
      theta[i] = theta_axis[idx[i]];
    }
    double dot = 0.0;
    for (int i = 0; i < d; ++i) dot += theta[i] * x[i];
    sum += std::cos(dot) / (lambda - kernel.symbol(theta));
  }
  return sum / static_cast<double>(total);
}

}  // namespace

double green_value(const TransitionKernel& kernel, const Site& x, double lambda,
                   const QuadratureSpec& spec) {
  if (!(lambda > 0.0)) throw LambdaNonpositive("green_value requires lambda > 0");
  if (kernel.dim > 3) throw DimensionUnsupported("quadrature supports d <= 3");

  int K = std::max(8, spec.nodes_per_axis);
  if (K % 2) ++K;
  const int K_max = max_nodes_for_dim(kernel.dim);

  double prev = trapezoid_pass(kernel, x, lambda, K);
  while (K < K_max) {
    K *= 2;
    double cur = trapezoid_pass(kernel, x, lambda, K);
    if (std::abs(cur - prev) < spec.tol) return cur;
    prev = cur;
  }
  std::ostringstream os;
  os << "quadrature did not reach tol " << spec.tol << " at K = " << K
     << " (lambda = " << lambda << ")";
  throw QuadratureNotConverged(os.str());
}

Eigen::MatrixXd green_matrix(const BRWConfig& config, double lambda,
                             const QuadratureSpec& spec) {
  const int N = config.source_count();
  Eigen::MatrixXd G(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      Site diff = sub(config.sources[j].position, config.sources[i].position);
      G(i, j) = config.sources[j].intensity * green_value(config.kernel, diff, lambda, spec);
    }
  return G;
}

TruncatedOperator TruncatedOperator::walk(const TransitionKernel& kernel, int R) {
  Box box(kernel.dim, R);
  const std::size_t n = box.size();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    Site s = box.site(i);
    M(i, i) = kernel.diagonal;
    for (const auto& [z, rate] : kernel.jumps) {
      Site t = add(s, z);
      if (box.contains(t)) M(i, box.index(t)) = rate;
    }
  }
  return TruncatedOperator{box, std::move(M)};
}

TruncatedOperator TruncatedOperator::evolution(const BRWConfig& config, int R) {
  TruncatedOperator op = walk(config.kernel, R);
  for (const auto& src : config.sources) {
    if (!op.box.contains(src.position)) throw PointOutsideBox("source outside truncated box");
    std::size_t i = op.box.index(src.position);
    op.matrix(i, i) += src.intensity;
  }
  return op;
}

double TruncatedOperator::spectral_norm() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

HeatSolver::HeatSolver(TruncatedOperator op) : op_(std::move(op)), es_(op_.matrix) {
  if (es_.info() != Eigen::Success) throw Error("eigendecomposition failed");
}

Eigen::VectorXd HeatSolver::apply(double t, const Eigen::VectorXd& v) const {
  Eigen::VectorXd coeff = es_.eigenvectors().transpose() * v;
  coeff.array() *= (t * es_.eigenvalues().array()).exp();
  return es_.eigenvectors() * coeff;
}

double HeatSolver::kernel_entry(double t, const Site& x, const Site& y) const {
  if (!op_.box.contains(x) || !op_.box.contains(y))
    throw PointOutsideBox("point outside truncated box");
  const std::size_t ix = op_.box.index(x), iy = op_.box.index(y);
  const auto& U = es_.eigenvectors();
  double v = 0.0;
  for (Eigen::Index k = 0; k < U.cols(); ++k)
    v += U(ix, k) * U(iy, k) * std::exp(t * es_.eigenvalues()(k));
  return v;
}

double HeatSolver::top_eigenvalue() const {
  return es_.eigenvalues()(es_.eigenvalues().size() - 1);
}

namespace {

void check_leakage(const HeatSolver& walk_solver, double t, const Site& x, double leak_tol) {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(walk_solver.box().size());
  Eigen::VectorXd mass = walk_solver.apply(t, ones);
  double leaked = 1.0 - mass(walk_solver.box().index(x));
  if (leaked > leak_tol) {
    std::ostringstream os;
    os << "boundary leakage " << leaked << " exceeds " << leak_tol << " at t = " << t;
    throw HorizonTooLong(os.str());
  }
}

}  // namespace

double truncated_heat(const TransitionKernel& kernel, int R, double t, const Site& x,
                      const Site& y, double leak_tol) {
  if (t < 0.0) throw Error("time must be nonnegative");
  HeatSolver solver(TruncatedOperator::walk(kernel, R));
  check_leakage(solver, t, x, leak_tol);
  return solver.kernel_entry(t, x, y);
}

double truncated_heat(const BRWConfig& config, int R, double t, const Site& x, const Site& y,
                      double leak_tol) {
  if (t < 0.0) throw Error("time must be nonnegative");
  HeatSolver walk_solver(TruncatedOperator::walk(config.kernel, R));
  check_leakage(walk_solver, t, x, leak_tol);
  HeatSolver solver(TruncatedOperator::evolution(config, R));
  return solver.kernel_entry(t, x, y);
}

double resolvent_green(const TransitionKernel& kernel, const Site& x, double lambda, int R) {
  if (!(lambda > 0.0)) throw LambdaNonpositive("resolvent requires lambda > 0");
  TruncatedOperator op = TruncatedOperator::walk(kernel, R);
  if (!op.box.contains(x)) throw PointOutsideBox("point outside truncated box");
  Eigen::MatrixXd M = lambda * Eigen::MatrixXd::Identity(op.matrix.rows(), op.matrix.cols()) -
                      op.matrix;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(op.matrix.rows());
  rhs(op.box.index(Site{0, 0, 0})) = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw SingularSystem("resolvent solve failed");
  Eigen::VectorXd u = llt.solve(rhs);
  return u(op.box.index(x));
}

RecurrenceProbe probe_g0(const TransitionKernel& kernel) {
  // I_0(lambda) increases as lambda -> 0; divergence shows as non-shrinking
  // increments along lambda_k = 4^{-k}.
  RecurrenceProbe probe;
  double lambda = 1.0;
  double prev = green_value(kernel, {0, 0, 0}, lambda);
  double prev_inc = 0.0;
  // descend as deep as the quadrature allows and judge the deepest increment
  // ratio; early ratios are contaminated by higher-order terms
  double last_value = prev, last_inc = 0.0, last_ratio = 0.0;
  int depth = 0;
  for (int k = 1; k <= 12; ++k) {
    lambda /= 4.0;
    double cur;
    try {
      cur = green_value(kernel, {0, 0, 0}, lambda, QuadratureSpec{16, 1e-9});
    } catch (const QuadratureNotConverged&) {
      break;
    }
    double inc = cur - prev;
    if (k >= 2) {
      last_value = cur;
      last_inc = inc;
      last_ratio = inc / prev_inc;
      depth = k;
    }
    prev_inc = inc;
    prev = cur;
  }
  if (depth >= 3 && last_ratio > 0.0 && last_ratio < 0.75) {
    // geometric decay of increments: extrapolate the tail
    probe.g0_finite = true;
    probe.g0_estimate = last_value + last_inc * last_ratio / (1.0 - last_ratio);
    probe.note = "extrapolated along lambda -> 0; verdict is asymptotic, not certified";
  } else {
    probe.g0_finite = false;
    probe.note = depth < 3 ? "quadrature exhausted before increments stabilized"
                           : "I_0(lambda) increments did not decay geometrically";
  }
  return probe;
}

}  // namespace brw
