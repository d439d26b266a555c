#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "brw/green.hpp"
#include "brw/walk_kernel.hpp"

namespace brw {

// Perron eigenvalue of the strictly positive matrix G(lambda), computed by
// power iteration with relative tolerance 1e-12 and an all-ones start.
double gamma(const BRWConfig& config, double lambda, const QuadratureSpec& spec = {});

// All eigenvalues of G(lambda), descending.  G(lambda) is similar to a
// symmetric matrix via diag(sqrt(beta)), so the spectrum is real.
Eigen::VectorXd green_matrix_spectrum(const BRWConfig& config, double lambda,
                                      const QuadratureSpec& spec = {});

struct Lambda0Result {
  std::optional<double> lambda0;     // empty = not supercritical
  double residual = 0.0;             // |gamma(lambda0) - 1|
  double bracket_lo = 0.0, bracket_hi = 0.0;
  bool extrapolated_absent = false;  // Absent decided by gamma(0+) extrapolation
  std::string note;
};

// Root of gamma(lambda) = 1 via bracketed bisection on the strictly
// decreasing gamma; Absent when sup gamma < 1 (decided by extrapolation
// toward lambda = 0, probe floor 1e-8).
Lambda0Result find_lambda0(const BRWConfig& config, const QuadratureSpec& spec = {});

// Every lambda > 0 with 1 in spec(G(lambda)); sorted descending.
// Each sorted-index eigenvalue curve of G(lambda) is strictly decreasing
// (dG/dlambda is similar to a negative definite matrix), so each curve
// crosses 1 at most once and |result| <= N.
std::vector<double> all_positive_eigs(const BRWConfig& config, const QuadratureSpec& spec = {});

struct SpectralResult {
  std::optional<double> lambda0;
  double residual = 0.0;
  std::vector<double> positive_eigs;          // descending, lambda0 first
  Eigen::VectorXd f_sources;                  // Perron vector of G(lambda0), positive
  std::map<Site, double> f_extended;          // l2-normalized over window (+ tail bound)
  int window_radius = 0;
  double tail_bound = 0.0;                    // estimated l2^2 mass outside the window
  double spectral_gap = 0.0;                  // 1 - |second eigenvalue of G(lambda0)|
  bool extrapolated_absent = false;
  std::string note;

  bool supercritical() const { return lambda0.has_value(); }
};

// Eigenvector at lambda0: Perron vector of G(lambda0) extended to the
// window ||x||_inf <= window_radius by f(x) = sum_j beta_j f(x_j) I_{x_j-x},
// scaled to unit l2 norm over window plus a geometric tail bound.
// Throws WindowTooSmall when the tail bound exceeds 1e-6 of the norm.
SpectralResult eigenfunction(const BRWConfig& config, double lambda0, int window_radius,
                             const QuadratureSpec& spec = {});

// Full spectral analysis: lambda0, all positive eigenvalues, eigenfunction.
SpectralResult analyze(const BRWConfig& config, int window_radius,
                       const QuadratureSpec& spec = {});

// psi(y) = lambda0 f(y) / sum_j beta_j f(x_j); invariant under rescaling of f.
double psi(const BRWConfig& config, const SpectralResult& spectral, const Site& y);

}  // namespace brw
