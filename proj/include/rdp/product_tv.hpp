#ifndef RDP_PRODUCT_TV_HPP
#define RDP_PRODUCT_TV_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"

namespace rdp {

/// Largest number of type classes (or sequences, for the fallback) that
/// product_tv is willing to sum over.
inline constexpr double kProductTvBudget = 1e7;

namespace detail {

inline double log_choose_count(std::size_t n, std::size_t k) {
  // log C(n + k - 1, k - 1)
  if (k <= 1) return 0.0;
  return std::lgamma(static_cast<double>(n + k)) - std::lgamma(static_cast<double>(k)) -
         std::lgamma(static_cast<double>(n + 1));
}

// Calls f(counts) for every composition of n into counts.size() parts.
template <class F>
void for_each_composition(std::size_t n, std::vector<std::size_t>& counts, std::size_t pos,
                          std::size_t remaining, F&& f) {
  if (pos + 1 == counts.size()) {
    counts[pos] = remaining;
    f(static_cast<const std::vector<std::size_t>&>(counts));
    return;
  }
  for (std::size_t c = 0; c <= remaining; ++c) {
    counts[pos] = c;
    for_each_composition(n, counts, pos + 1, remaining - c, f);
  }
}

inline double log_mass_of_type(std::span<const double> p, const std::vector<std::size_t>& counts) {
  double l = 0.0;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (counts[a] == 0) continue;
    if (p[a] <= 0.0) return -std::numeric_limits<double>::infinity();
    l += static_cast<double>(counts[a]) * std::log(p[a]);
  }
  return l;
}

}  // namespace detail

/// Exact d_TV(p^{⊗n}, q^{⊗n}). Product masses depend on a sequence only
/// through its type, so the sum runs over type classes weighted by their
/// multinomial sizes.
inline double product_tv(const ProbVec& p, const ProbVec& q, std::size_t n) {
  detail::require(p.size() == q.size(), "product_tv: alphabet sizes differ");
  detail::require(n >= 1, "product_tv: n must be positive");
  const std::size_t k = p.size();
  if (detail::log_choose_count(n, k) > std::log(kProductTvBudget))
    throw BudgetError("product_tv: too many type classes for n = " + std::to_string(n));

  const double log_n_fact = std::lgamma(static_cast<double>(n) + 1.0);
  double l1 = 0.0;
  std::vector<std::size_t> counts(k, 0);
  detail::for_each_composition(n, counts, 0, n, [&](const std::vector<std::size_t>& c) {
    double log_mult = log_n_fact;
    for (auto ca : c) log_mult -= std::lgamma(static_cast<double>(ca) + 1.0);
    const double lp = detail::log_mass_of_type(p.masses(), c);
    const double lq = detail::log_mass_of_type(q.masses(), c);
    const double hi = std::max(lp, lq);
    if (!std::isfinite(hi)) return;
    const double lo = std::min(lp, lq);
    const double diff = std::isfinite(lo) ? -std::expm1(lo - hi) : 1.0;
    l1 += std::exp(log_mult + hi) * diff;
  });
  return std::clamp(0.5 * l1, 0.0, 1.0);
}

/// Same quantity by enumerating all k^n sequences; used as an independent
/// check of the type-class route.
inline double product_tv_by_sequences(const ProbVec& p, const ProbVec& q, std::size_t n) {
  detail::require(p.size() == q.size(), "product_tv: alphabet sizes differ");
  detail::require(n >= 1, "product_tv: n must be positive");
  const std::size_t k = p.size();
  if (static_cast<double>(n) * std::log(static_cast<double>(k)) > std::log(kProductTvBudget))
    throw BudgetError("product_tv_by_sequences: k^n exceeds the enumeration budget");
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= k;
  double l1 = 0.0;
  std::vector<std::size_t> seq(n, 0);
  for (std::size_t s = 0; s < total; ++s) {
    double a = 1.0, b = 1.0;
    for (auto sym : seq) {
      a *= p[sym];
      b *= q[sym];
    }
    l1 += std::abs(a - b);
    for (std::size_t i = n; i-- > 0;) {
      if (++seq[i] < k) break;
      seq[i] = 0;
    }
  }
  return std::clamp(0.5 * l1, 0.0, 1.0);
}

/// limsup_n d_TV(p^{⊗n}, q^{⊗n}), which is 0 when the marginals coincide and
/// 1 otherwise. `tol` decides when two marginals count as equal.
inline int limsup_product_tv(const ProbVec& p, const ProbVec& q, double tol = 1e-9) {
  detail::require(tol > 0.0, "limsup_product_tv: tol must be positive");
  return tv_distance(p, q) <= tol ? 0 : 1;
}

/// Same decision for marginals on alphabets identified by position.
inline int limsup_product_tv(std::span<const double> p, std::span<const double> q, double tol = 1e-9) {
  detail::require(tol > 0.0, "limsup_product_tv: tol must be positive");
  return tv_distance_padded(p, q) <= tol ? 0 : 1;
}

}  // namespace rdp

#endif  // RDP_PRODUCT_TV_HPP
