#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <vector>

namespace brw {

// Lattice point in Z^d, d <= 3.  Unused coordinates stay zero so that
// equality and hashing work uniformly for any dimension.
using Site = std::array<int, 3>;

constexpr int kMaxDim = 3;

inline Site make_site(const std::vector<int>& coords) {
  if (coords.empty() || coords.size() > kMaxDim)
    throw std::invalid_argument("lattice vector must have 1..3 coordinates");
  Site s{0, 0, 0};
  for (std::size_t i = 0; i < coords.size(); ++i) s[i] = coords[i];
  return s;
}

inline Site add(const Site& a, const Site& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Site sub(const Site& a, const Site& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Site neg(const Site& a) { return {-a[0], -a[1], -a[2]}; }

inline bool is_zero(const Site& a) { return a[0] == 0 && a[1] == 0 && a[2] == 0; }

inline int linf_norm(const Site& a) {
  int m = 0;
  for (int c : a) m = std::max(m, std::abs(c));
  return m;
}

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept {
    // splitmix-style mix of the three coordinates
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (int c : s) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c)) + 0x9e3779b97f4a7c15ull +
           (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

// Cube {x : ||x||_inf <= radius} in Z^d with row-major linear indexing.
struct Box {
  int dim;
  int radius;

  Box(int d, int r) : dim(d), radius(r) {
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("box dimension out of range");
    if (r < 0) throw std::invalid_argument("box radius must be nonnegative");
  }

  int side() const { return 2 * radius + 1; }

  std::size_t size() const {
    std::size_t n = 1;
    for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(side());
    return n;
  }

  bool contains(const Site& s) const {
    for (int i = 0; i < dim; ++i)
      if (std::abs(s[i]) > radius) return false;
    for (int i = dim; i < kMaxDim; ++i)
      if (s[i] != 0) return false;
    return true;
  }

  std::size_t index(const Site& s) const {
    std::size_t idx = 0;
    for (int i = 0; i < dim; ++i) idx = idx * side() + static_cast<std::size_t>(s[i] + radius);
    return idx;
  }

  Site site(std::size_t idx) const {
    Site s{0, 0, 0};
    for (int i = dim - 1; i >= 0; --i) {
      s[i] = static_cast<int>(idx % side()) - radius;
      idx /= side();
    }
    return s;
  }
};

}  // namespace brw
