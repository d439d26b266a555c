#include "brw/walk_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "brw/errors.hpp"

namespace brw {

namespace {

constexpr double kSymmetryTol = 1e-12;

std::string site_str(const Site& s, int dim) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < dim; ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

// Lattice generated by the vectors equals Z^d iff the Hermite form of the
// vector matrix has unit diagonal product.  Row reduction with integer
// Euclid; entries stay small for any sane kernel support.
bool generates_full_lattice(std::vector<Site> vecs, int dim) {
  std::vector<std::array<long long, kMaxDim>> rows;
  rows.reserve(vecs.size());
  for (const Site& v : vecs) rows.push_back({v[0], v[1], v[2]});

  int pivot_row = 0;
  for (int col = 0; col < dim && pivot_row < static_cast<int>(rows.size()); ++col) {
    // gcd-reduce column below pivot_row until at most one nonzero remains
    while (true) {
      int best = -1;
      for (int r = pivot_row; r < static_cast<int>(rows.size()); ++r) {
        if (rows[r][col] != 0 &&
            (best < 0 || std::llabs(rows[r][col]) < std::llabs(rows[best][col])))
          best = r;
      }
      if (best < 0) break;
      std::swap(rows[pivot_row], rows[best]);
      bool reduced_all = true;
      for (int r = pivot_row + 1; r < static_cast<int>(rows.size()); ++r) {
        if (rows[r][col] == 0) continue;
        long long q = rows[r][col] / rows[pivot_row][col];
        for (int c = 0; c < dim; ++c) rows[r][c] -= q * rows[pivot_row][c];
        if (rows[r][col] != 0) reduced_all = false;
      }
      if (reduced_all) break;
    }
    if (rows[pivot_row][col] != 0) ++pivot_row;
  }

  if (pivot_row < dim) return false;  // rank deficient
  long long det = 1;
  // after elimination the first dim pivot rows are upper triangular
  std::vector<std::array<long long, kMaxDim>> tri(rows.begin(), rows.begin() + dim);
  for (int c = 0; c < dim; ++c) det *= tri[c][c];
  return std::llabs(det) == 1;
}

}  // namespace

double TransitionKernel::symbol(const double* theta) const {
  double phi = diagonal;
  for (const auto& [z, rate] : jumps) {
    double dot = 0.0;
    for (int i = 0; i < dim; ++i) dot += z[i] * theta[i];
    phi += rate * std::cos(dot);
  }
  return phi;
}

double TransitionKernel::symbol(const std::vector<double>& theta) const {
  if (static_cast<int>(theta.size()) != dim)
    throw std::invalid_argument("theta dimension mismatch");
  return symbol(theta.data());
}

TransitionKernel validate_kernel(const std::vector<std::pair<Site, double>>& raw_entries,
                                 int dim) {
  if (dim < 1 || dim > kMaxDim)
    throw DimensionUnsupported("kernel dimension must be 1, 2 or 3");

  std::unordered_map<Site, double, SiteHash> entries;
  for (const auto& [z, rate] : raw_entries) {
    if (is_zero(z)) continue;  // diagonal is recomputed, never trusted
    for (int i = dim; i < kMaxDim; ++i)
      if (z[i] != 0) throw Error("kernel offset exceeds declared dimension");
    if (!std::isfinite(rate) || rate < 0.0)
      throw Error("kernel rate must be finite and nonnegative at " + site_str(z, dim));
    entries[z] += rate;
  }

  TransitionKernel kernel;
  kernel.dim = dim;
  double off_sum = 0.0;
  for (const auto& [z, rate] : entries) {
    if (rate == 0.0) continue;
    auto mirror = entries.find(neg(z));
    double mrate = mirror == entries.end() ? 0.0 : mirror->second;
    if (std::abs(rate - mrate) > kSymmetryTol * std::max(1.0, std::abs(rate)))
      throw AsymmetricKernel("a(z) != a(-z) at z = " + site_str(z, dim));
    kernel.jumps.emplace_back(z, rate);
    off_sum += rate;
  }
  if (kernel.jumps.empty()) throw EmptySupport("kernel has no nonzero off-diagonal rate");
  kernel.diagonal = -off_sum;

  std::vector<Site> support;
  for (const auto& [z, rate] : kernel.jumps) support.push_back(z);
  if (!generates_full_lattice(support, dim))
    throw NotIrreducible("kernel support does not generate Z^d");

  std::sort(kernel.jumps.begin(), kernel.jumps.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return kernel;
}

double BranchingSource::factorial_moment(int r) const {
  if (r < 1) throw OutOfRange("factorial moment order must be >= 1");
  double m = 0.0;
  for (std::size_t n = 0; n < coeffs.size(); ++n) {
    double falling = 1.0;
    for (int k = 0; k < r; ++k) falling *= static_cast<double>(n) - k;
    if (static_cast<int>(n) >= r) m += falling * coeffs[n];
  }
  return m;
}

BranchingSource make_source(const Site& position, const std::vector<double>& coeffs) {
  if (coeffs.size() < 2) throw InvalidCoefficients("need at least b_0 and b_1");
  double sum = 0.0;
  for (std::size_t n = 0; n < coeffs.size(); ++n) {
    if (!std::isfinite(coeffs[n])) throw InvalidCoefficients("non-finite branching coefficient");
    if (n == 1) {
      if (coeffs[n] >= 0.0) throw InvalidCoefficients("b_1 must be negative");
    } else if (coeffs[n] < 0.0) {
      throw InvalidCoefficients("b_n must be nonnegative for n != 1");
    }
    sum += coeffs[n];
  }
  double scale = 0.0;
  for (double b : coeffs) scale = std::max(scale, std::abs(b));
  if (std::abs(sum) > 1e-12 * std::max(1.0, scale))
    throw InvalidCoefficients("branching coefficients must sum to zero");

  BranchingSource src;
  src.position = position;
  src.coeffs = coeffs;
  double beta = 0.0;
  for (std::size_t n = 0; n < coeffs.size(); ++n) beta += static_cast<double>(n) * coeffs[n];
  src.intensity = beta;
  src.supercritical_flag = beta > 0.0;
  return src;
}

std::pair<double, std::vector<double>> source_moments(const std::vector<double>& coeffs,
                                                      int r_max) {
  BranchingSource src = make_source({0, 0, 0}, coeffs);
  std::vector<double> moments;
  moments.reserve(r_max);
  for (int r = 1; r <= r_max; ++r) moments.push_back(src.factorial_moment(r));
  return {src.intensity, moments};
}

BRWConfig make_config(TransitionKernel kernel, std::vector<BranchingSource> sources) {
  if (sources.empty()) throw Error("configuration needs at least one branching source");
  for (std::size_t i = 0; i < sources.size(); ++i)
    for (std::size_t j = i + 1; j < sources.size(); ++j)
      if (sources[i].position == sources[j].position)
        throw Error("source positions must be pairwise distinct");
  for (const auto& s : sources)
    for (int i = kernel.dim; i < kMaxDim; ++i)
      if (s.position[i] != 0) throw Error("source position exceeds kernel dimension");
  return BRWConfig{std::move(kernel), std::move(sources)};
}

}  // namespace brw
