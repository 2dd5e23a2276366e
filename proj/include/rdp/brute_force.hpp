#ifndef RDP_BRUTE_FORCE_HPP
#define RDP_BRUTE_FORCE_HPP

// Grid-search oracle for R^(e)(Δ, Π) on very small alphabets.
//
// Every channel row P_{Y|X=x,Z=z} ranges over the simplex points with
// coordinates in multiples of 1/resolution. The objective and both
// constraints are sums of per-z-slice terms, so each slice is enumerated on
// its own and slices are combined afterwards: one slice by a direct scan,
// two binary slices by a sweep over distortion with a range-minimum tree
// over the slice output mass.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"
#include "rdp/solver.hpp"

namespace rdp {

/// Largest number of grid points enumerated per slice or in total.
inline constexpr double kBruteForceBudget = 2e7;

namespace detail {

struct SlicePoint {
  double info = 0.0;  ///< p(z) · I(X;Y|Z=z), bits
  double dist = 0.0;  ///< Σ_x p(x,z) E[d(x,Y)]
  std::vector<double> q;  ///< Σ_x p(x,z) P(y|x,z)
};

// All compositions of `res` into `k` parts, as probability vectors.
inline std::vector<std::vector<double>> simplex_grid(std::size_t k, int res) {
  std::vector<std::vector<double>> out;
  std::vector<int> c(k, 0);
  auto rec = [&](auto&& self, std::size_t pos, int left) -> void {
    if (pos + 1 == k) {
      c[pos] = left;
      std::vector<double> v(k);
      for (std::size_t i = 0; i < k; ++i) v[i] = static_cast<double>(c[i]) / res;
      out.push_back(std::move(v));
      return;
    }
    for (int a = 0; a <= left; ++a) {
      c[pos] = a;
      self(self, pos + 1, left - a);
    }
  };
  rec(rec, 0, res);
  return out;
}

inline std::vector<SlicePoint> enumerate_slice(const ProblemSpec& P, std::size_t z, int res) {
  const std::size_t X = P.x_size(), Y = P.y_size;
  const auto rows = simplex_grid(Y, res);
  double count = 1.0;
  for (std::size_t x = 0; x < X; ++x) count *= static_cast<double>(rows.size());
  if (count > kBruteForceBudget)
    throw BudgetError("brute_force_rdp: dimensionality too large (" + std::to_string(count) + " grid points)");
  std::vector<SlicePoint> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<std::size_t> pick(X, 0);
  std::vector<double> r(Y);
  while (true) {
    SlicePoint sp;
    sp.q.assign(Y, 0.0);
    for (std::size_t x = 0; x < X; ++x)
      for (std::size_t y = 0; y < Y; ++y) {
        const double v = P.p(x, z) * rows[pick[x]][y];
        sp.q[y] += v;
        sp.dist += v * P.d(x, y);
      }
    double pz = 0.0;
    for (std::size_t x = 0; x < X; ++x) pz += P.p(x, z);
    for (std::size_t x = 0; x < X; ++x)
      for (std::size_t y = 0; y < Y; ++y) {
        const double w = rows[pick[x]][y];
        if (w > 0.0 && P.p(x, z) > 0.0) sp.info += P.p(x, z) * w * std::log2(w * pz / sp.q[y]);
      }
    sp.info = std::max(sp.info, 0.0);
    out.push_back(std::move(sp));
    std::size_t x = X;
    while (x-- > 0) {
      if (++pick[x] < rows.size()) break;
      pick[x] = 0;
    }
    if (x == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

// Range-minimum segment tree over positions [0, n).
class MinTree {
 public:
  explicit MinTree(std::size_t n) : n_(n), t_(2 * n, std::numeric_limits<double>::infinity()) {}
  void lower(std::size_t i, double v) {
    for (i += n_; i >= 1; i >>= 1) t_[i] = std::min(t_[i], v);
  }
  double query(std::size_t lo, std::size_t hi) const {  // [lo, hi)
    double m = std::numeric_limits<double>::infinity();
    for (lo += n_, hi += n_; lo < hi; lo >>= 1, hi >>= 1) {
      if (lo & 1) m = std::min(m, t_[lo++]);
      if (hi & 1) m = std::min(m, t_[--hi]);
    }
    return m;
  }

 private:
  std::size_t n_;
  std::vector<double> t_;
};

}  // namespace detail

/// Reusable grid oracle: the grid is enumerated once, then any number of
/// (Δ, Π) targets can be queried. Returns +inf when no grid channel is
/// feasible.
class BruteForceOracle {
 public:
  BruteForceOracle(const ProblemSpec& spec, int grid_resolution) : spec_(spec), px_(spec.tv_alphabet(), 0.0) {
    detail::require(grid_resolution >= 10, "brute_force_rdp: grid_resolution must be >= 10");
    const std::size_t params = spec.x_size() * spec.z_size() * (spec.y_size - 1);
    if (params > 6) throw BudgetError("brute_force_rdp: dimensionality too large (more than 6 channel parameters)");
    const auto px = spec.p_x();
    for (std::size_t x = 0; x < spec.x_size(); ++x) px_[x] = px[x];
    for (std::size_t z = 0; z < spec.z_size(); ++z) {
      double pz = 0.0;
      for (std::size_t x = 0; x < spec.x_size(); ++x) pz += spec.p(x, z);
      if (pz > 0.0) slices_.push_back(detail::enumerate_slice(spec, z, grid_resolution));
    }
    if (slices_.size() > 2 || (slices_.size() == 2 && (spec.y_size != 2 || spec.x_size() != 2)))
      throw BudgetError("brute_force_rdp: dimensionality too large (only one slice, or two binary slices)");
    if (slices_.size() == 2) prepare_pair();
  }

  double query(double delta, double pi) const {
    detail::check_targets(delta, pi);
    constexpr double eps = 1e-12;
    double best = std::numeric_limits<double>::infinity();
    if (slices_.size() == 1) {
      for (const auto& sp : slices_[0]) {
        if (sp.dist > delta + eps || sp.info >= best) continue;
        if (tv_distance_padded(px_, sp.q) <= pi + eps) best = sp.info;
      }
      return best;
    }
    // Two binary slices: TV = |P_X(0) − a1 − a2| with a_k the slice mass on y = 0.
    const auto& s1 = slices_[0];
    std::vector<std::size_t> order1(s1.size());
    std::iota(order1.begin(), order1.end(), 0);
    std::sort(order1.begin(), order1.end(), [&](std::size_t i, std::size_t j) { return s1[i].dist > s1[j].dist; });
    detail::MinTree tree(a2_sorted_.size());
    std::size_t next = 0;
    for (auto i : order1) {
      const double budget = delta + eps - s1[i].dist;
      while (next < by_dist2_.size() && slices_[1][by_dist2_[next]].dist <= budget) {
        tree.lower(rank2_[by_dist2_[next]], slices_[1][by_dist2_[next]].info);
        ++next;
      }
      if (next == 0) continue;
      const double lo = px_[0] - pi - eps - s1[i].q[0];
      const double hi = px_[0] + pi + eps - s1[i].q[0];
      const auto b = std::lower_bound(a2_sorted_.begin(), a2_sorted_.end(), lo) - a2_sorted_.begin();
      const auto e = std::upper_bound(a2_sorted_.begin(), a2_sorted_.end(), hi) - a2_sorted_.begin();
      if (b >= e) continue;
      best = std::min(best, s1[i].info + tree.query(static_cast<std::size_t>(b), static_cast<std::size_t>(e)));
    }
    return best;
  }

 private:
  void prepare_pair() {
    const auto& s2 = slices_[1];
    by_dist2_.resize(s2.size());
    std::iota(by_dist2_.begin(), by_dist2_.end(), 0);
    std::sort(by_dist2_.begin(), by_dist2_.end(), [&](std::size_t i, std::size_t j) { return s2[i].dist < s2[j].dist; });
    std::vector<std::size_t> by_a(s2.size());
    std::iota(by_a.begin(), by_a.end(), 0);
    std::sort(by_a.begin(), by_a.end(), [&](std::size_t i, std::size_t j) { return s2[i].q[0] < s2[j].q[0]; });
    rank2_.resize(s2.size());
    a2_sorted_.resize(s2.size());
    for (std::size_t k = 0; k < by_a.size(); ++k) {
      rank2_[by_a[k]] = k;
      a2_sorted_[k] = s2[by_a[k]].q[0];
    }
  }

  ProblemSpec spec_;
  std::vector<double> px_;
  std::vector<std::vector<detail::SlicePoint>> slices_;
  std::vector<std::size_t> by_dist2_, rank2_;
  std::vector<double> a2_sorted_;
};

/// Minimum I(X;Y|Z) over grid channels with E[D] ≤ Δ and d_TV(P_X, P_Y) ≤ Π.
inline double brute_force_rdp(const ProblemSpec& spec, double delta, double pi, int grid_resolution) {
  return BruteForceOracle(spec, grid_resolution).query(delta, pi);
}

}  // namespace rdp

#endif  // RDP_BRUTE_FORCE_HPP
