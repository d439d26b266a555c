#pragma once

#include <utility>
#include <vector>

#include "brw/lattice.hpp"

namespace brw {

// Symmetric spatially homogeneous jump-rate function a(z) on Z^d with
// finite support.  The diagonal a(0) is always recomputed so that the
// regularity condition a(0) + sum_{z != 0} a(z) = 0 holds exactly.
struct TransitionKernel {
  int dim = 1;
  std::vector<std::pair<Site, double>> jumps;  // (z, a(z)) with z != 0, a(z) > 0
  double diagonal = 0.0;                       // a(0) < 0

  // Total per-particle jump rate -a(0).
  double jump_rate() const { return -diagonal; }

  // Fourier symbol phi(theta) = sum_z a(z) cos(z, theta), theta in [-pi,pi]^d.
  // Real, phi(0) = 0 and phi(theta) <= 0 for valid kernels.
  double symbol(const double* theta) const;
  double symbol(const std::vector<double>& theta) const;
};

// Validates symmetry, irreducibility and nonempty support; computes a(0).
// Throws AsymmetricKernel, NotIrreducible or EmptySupport.
TransitionKernel validate_kernel(const std::vector<std::pair<Site, double>>& raw_entries, int dim);

// Galton-Watson branching mechanism b_0, b_1, ..., b_M sitting at a lattice
// point.  b_n >= 0 for n != 1, b_1 < 0, sum b_n = 0.
struct BranchingSource {
  Site position{0, 0, 0};
  std::vector<double> coeffs;  // coeffs[n] = b_n
  double intensity = 0.0;      // beta = sum n b_n
  bool supercritical_flag = false;  // beta > 0

  // r-th factorial moment beta^{(r)} = sum_n n(n-1)...(n-r+1) b_n.
  double factorial_moment(int r) const;
};

// Validates the sign pattern and zero-sum of the coefficients.
// Throws InvalidCoefficients.
BranchingSource make_source(const Site& position, const std::vector<double>& coeffs);

// (beta, [beta^{(1)}, ..., beta^{(r_max)}]) for a raw coefficient list.
std::pair<double, std::vector<double>> source_moments(const std::vector<double>& coeffs,
                                                      int r_max);

struct BRWConfig {
  TransitionKernel kernel;
  std::vector<BranchingSource> sources;

  int source_count() const { return static_cast<int>(sources.size()); }
};

// Checks N >= 1 and pairwise distinct source positions.
BRWConfig make_config(TransitionKernel kernel, std::vector<BranchingSource> sources);

}  // namespace brw
