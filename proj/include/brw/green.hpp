#pragma once

#include <Eigen/Dense>
#include <optional>

#include "brw/lattice.hpp"
#include "brw/walk_kernel.hpp"

namespace brw {

// Tensor-product trapezoid rule on the torus [-pi,pi]^d.  nodes_per_axis is
// the starting resolution; evaluation doubles it until the Cauchy criterion
// |I_K - I_{2K}| < tol holds.
struct QuadratureSpec {
  int nodes_per_axis = 16;
  double tol = 1e-10;
};

// I_x(lambda) = G_lambda(x,0) = (2pi)^{-d} int cos(theta,x)/(lambda - phi(theta)) dtheta.
// Requires lambda > 0.  Throws LambdaNonpositive, QuadratureNotConverged.
double green_value(const TransitionKernel& kernel, const Site& x, double lambda,
                   const QuadratureSpec& spec = {});

// N x N matrix with entries G(lambda)_{ij} = beta_j I_{x_j - x_i}(lambda).
Eigen::MatrixXd green_matrix(const BRWConfig& config, double lambda,
                             const QuadratureSpec& spec = {});

// Dense restriction of the walk generator A (or the evolution operator
// H = A + sum beta_i Delta_{x_i}) to the cube ||x||_inf <= R with absorbing
// boundary.  Symmetric.
struct TruncatedOperator {
  Box box;
  Eigen::MatrixXd matrix;

  static TruncatedOperator walk(const TransitionKernel& kernel, int R);
  static TruncatedOperator evolution(const BRWConfig& config, int R);

  double spectral_norm() const;
};

// Spectral decomposition of a truncated operator, reused across times t.
class HeatSolver {
 public:
  explicit HeatSolver(TruncatedOperator op);

  const Box& box() const { return op_.box; }
  const TruncatedOperator& op() const { return op_; }

  // (e^{tM} v) for the truncated operator M.
  Eigen::VectorXd apply(double t, const Eigen::VectorXd& v) const;

  // (e^{tM} delta_y)(x), i.e. p(t,x,y) for the walk operator or
  // m_1(t,x,y) for the evolution operator.
  double kernel_entry(double t, const Site& x, const Site& y) const;

  // Largest eigenvalue of the truncated operator.
  double top_eigenvalue() const;
  const Eigen::VectorXd& eigenvalues() const { return es_.eigenvalues(); }

 private:
  TruncatedOperator op_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_;
};

// p(t,x,y) of the pure walk on the truncated box.  Certifies that the mass
// leaked through the absorbing boundary, 1 - sum_y p(t,x,y), stays below
// leak_tol; throws HorizonTooLong otherwise.
double truncated_heat(const TransitionKernel& kernel, int R, double t, const Site& x,
                      const Site& y, double leak_tol = 1e-9);

// m_1(t,x,y) on the truncated box, same leakage certificate (checked on the
// underlying walk, which is what reaches the boundary).
double truncated_heat(const BRWConfig& config, int R, double t, const Site& x, const Site& y,
                      double leak_tol = 1e-9);

// Independent oracle for green_value: solves (lambda I - A_R) u = delta_0 on
// the truncated box and returns u(x).
double resolvent_green(const TransitionKernel& kernel, const Site& x, double lambda, int R);

// Finite/infinite verdict for G_0 = lim_{lambda->0} I_0(lambda), decided by
// extrapolation along lambda -> 0.  Returns the extrapolated value when the
// limit looks finite.
struct RecurrenceProbe {
  bool g0_finite;
  std::optional<double> g0_estimate;
  std::string note;
};
RecurrenceProbe probe_g0(const TransitionKernel& kernel);

}  // namespace brw
