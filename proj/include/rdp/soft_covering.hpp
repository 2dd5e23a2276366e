#ifndef RDP_SOFT_COVERING_HPP
#define RDP_SOFT_COVERING_HPP

// Exact small-n local channel synthesis. A codebook of J = ⌊2^{nR}⌋ inputs
// u^n(w^n, j) ~ ∏ P(u_i|w_i) is pushed through the memoryless channel
// P(v|u,w); the uniform mixture of the outputs is compared in TV with the
// target ∏ P(v_i|w_i). Codeword symbols are
//
//   inverse_cdf(P(·|w_i), unit(prf(seed, {digest(w^n), j, i})))
//
// with j one-based.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"
#include "rdp/random.hpp"
#include "rdp/solver.hpp"

namespace rdp {

/// Largest output space |V|^n, and largest J·|V|^n, that synthesis enumerates.
inline constexpr double kSynthesisBudget = 1e7;
inline constexpr double kSynthesisWorkBudget = 1e9;

/// Sequence over W whose type is the largest-remainder rounding of n·P_W,
/// with symbols in increasing order.
inline std::vector<std::size_t> uniform_type_sequence(const ProbVec& p_w, std::size_t n) {
  const std::size_t k = p_w.size();
  std::vector<std::size_t> count(k);
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t a = 0; a < k; ++a) {
    const double t = p_w[a] * static_cast<double>(n);
    count[a] = static_cast<std::size_t>(std::floor(t));
    used += count[a];
    rem.push_back({t - std::floor(t), a});
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t i = 0; used < n; ++i, ++used) ++count[rem[i % k].second];
  std::vector<std::size_t> w;
  for (std::size_t a = 0; a < k; ++a) w.insert(w.end(), count[a], a);
  return w;
}

struct SynthesisSpec {
  ProbVec p_w;
  Channel u_given_w;   ///< P(u|w)
  Channel v_given_uw;  ///< P(v|u,w)
  std::size_t n = 1;
  double R = 0.0;
  std::vector<std::size_t> w_seq;  ///< empty: uniform_type_sequence(p_w, n)
  std::vector<std::uint64_t> seeds;

  std::size_t w_size() const { return p_w.size(); }
  std::size_t u_size() const { return u_given_w.out_dim(); }
  std::size_t v_size() const { return v_given_uw.out_dim(); }

  std::vector<std::size_t> conditioning() const { return w_seq.empty() ? uniform_type_sequence(p_w, n) : w_seq; }

  void validate() const {
    detail::require(n >= 1, "SynthesisSpec: n must be >= 1");
    detail::require(std::isfinite(R) && R >= 0.0, "SynthesisSpec: R must be finite and >= 0");
    detail::require(u_given_w.in_dims() == std::vector<std::size_t>{w_size()},
                    "SynthesisSpec: u_given_w must be indexed by w");
    detail::require(v_given_uw.in_dims() == std::vector<std::size_t>{u_size(), w_size()},
                    "SynthesisSpec: v_given_uw must be indexed by (u, w)");
    detail::require(w_seq.empty() || w_seq.size() == n, "SynthesisSpec: w sequence length differs from n");
    for (auto w : conditioning()) {
      detail::require(w < w_size(), "SynthesisSpec: w symbol out of range");
      detail::require(u_given_w.defined(w), "SynthesisSpec: u_given_w undefined on a used w");
      for (std::size_t u = 0; u < u_size(); ++u)
        detail::require(u_given_w(w, u) <= 0.0 || v_given_uw.defined(u * w_size() + w),
                        "SynthesisSpec: v_given_uw undefined on a reachable (u, w)");
    }
    if (std::pow(static_cast<double>(v_size()), static_cast<double>(n)) > kSynthesisBudget)
      throw BudgetError("soft covering: |V|^n exceeds the enumeration budget");
  }

  std::uint64_t codebook_size() const {
    const double bits = static_cast<double>(n) * R;
    const double work = std::exp2(bits) * std::pow(static_cast<double>(v_size()), static_cast<double>(n));
    if (bits >= 62.0 || work > kSynthesisWorkBudget)
      throw BudgetError("soft covering: codebook of 2^" + std::to_string(bits) + " words exceeds the work budget");
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(std::exp2(bits) * (1.0 + 1e-12))));
  }

  /// P̃ = P_{UV|W} · P̂_{w^n} over U × V × W.
  JointTable tilde_law() const {
    const std::size_t U = u_size(), V = v_size(), W = w_size();
    const auto w = conditioning();
    std::vector<double> type(W, 0.0);
    for (auto a : w) type[a] += 1.0 / static_cast<double>(w.size());
    std::vector<double> p(U * V * W, 0.0);
    for (std::size_t u = 0; u < U; ++u)
      for (std::size_t v = 0; v < V; ++v)
        for (std::size_t c = 0; c < W; ++c)
          if (type[c] > 0.0 && u_given_w(c, u) > 0.0)
            p[(u * V + v) * W + c] = type[c] * u_given_w(c, u) * v_given_uw(u * W + c, v);
    return JointTable({U, V, W}, std::move(p), 1e-9);
  }
};

/// I_P̃(U;V|W), the rate threshold of the synthesis.
inline double synthesis_threshold(const SynthesisSpec& spec) {
  spec.validate();
  return conditional_mutual_information(spec.tilde_law(), 2);
}

namespace detail {

// out ← out ⊗ row, for laws over V^i growing to V^{i+1}.
inline void kron_append(std::vector<double>& out, std::span<const double> row) {
  std::vector<double> next(out.size() * row.size());
  for (std::size_t a = 0; a < out.size(); ++a)
    for (std::size_t b = 0; b < row.size(); ++b) next[a * row.size() + b] = out[a] * row[b];
  out.swap(next);
}

}  // namespace detail

/// Target ∏_i P(v_i | w_i) over V^n, lexicographic with the first symbol most significant.
inline std::vector<double> target_output_law(const SynthesisSpec& spec) {
  spec.validate();
  const std::size_t U = spec.u_size(), V = spec.v_size(), W = spec.w_size();
  std::vector<double> law{1.0}, row(V);
  for (auto w : spec.conditioning()) {
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t u = 0; u < U; ++u)
      if (spec.u_given_w(w, u) > 0.0)
        for (std::size_t v = 0; v < V; ++v) row[v] += spec.u_given_w(w, u) * spec.v_given_uw(u * W + w, v);
    detail::kron_append(law, row);
  }
  return law;
}

/// u^n(w^n, j), one-based j.
inline std::vector<std::size_t> synthesis_codeword(const SynthesisSpec& spec, std::span<const std::size_t> w,
                                                   std::uint64_t seed, std::uint64_t j) {
  const std::uint64_t dw = sequence_digest(w);
  std::vector<std::size_t> u(w.size());
  std::vector<double> row(spec.u_size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t a = 0; a < row.size(); ++a) row[a] = spec.u_given_w(w[i], a);
    u[i] = inverse_cdf(row, unit_from(prf(seed, {dw, j, i})));
  }
  return u;
}

/// Q_{V^n|W^n=w^n} = (1/J) Σ_j ∏_i P(v_i | u_i(w^n, j), w_i).
inline std::vector<double> synthesize_output_law(const SynthesisSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::uint64_t J = spec.codebook_size();
  const std::size_t W = spec.w_size();
  const auto w = spec.conditioning();
  std::vector<double> q;
  for (std::uint64_t j = 1; j <= J; ++j) {
    const auto u = synthesis_codeword(spec, w, seed, j);
    std::vector<double> law{1.0};
    for (std::size_t i = 0; i < w.size(); ++i) detail::kron_append(law, spec.v_given_uw.row(u[i] * W + w[i]));
    if (q.empty()) q.assign(law.size(), 0.0);
    for (std::size_t k = 0; k < law.size(); ++k) q[k] += law[k];
  }
  for (auto& v : q) v /= static_cast<double>(J);
  return q;
}

inline double tv_to_target(const SynthesisSpec& spec, std::uint64_t seed) {
  return tv_distance(target_output_law(spec), synthesize_output_law(spec, seed));
}

struct SynthesisResult {
  std::vector<double> tv;  ///< one entry per seed
  double mean_tv = 0.0;
  double threshold = 0.0;  ///< I_P̃(U;V|W)
};

/// TV to target for every seed of the spec (concurrently, capped by RDP_THREADS).
inline SynthesisResult synthesize(const SynthesisSpec& spec) {
  detail::require(!spec.seeds.empty(), "soft covering: no codebook seeds");
  SynthesisResult res;
  res.threshold = synthesis_threshold(spec);
  res.tv.assign(spec.seeds.size(), 0.0);
  const auto target = target_output_law(spec);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t k = begin; k < spec.seeds.size(); k += stride)
      res.tv[k] = tv_distance(target, synthesize_output_law(spec, spec.seeds[k]));
  };
  detail::parallel_strided(spec.seeds.size(), work);
  for (double v : res.tv) res.mean_tv += v;
  res.mean_tv /= static_cast<double>(res.tv.size());
  return res;
}

struct SweepCell {
  std::size_t n = 0;
  double R = 0.0;
  double threshold = 0.0;
  double mean_tv = 0.0;
  std::size_t seed_count = 0;
  bool ok = false;
  std::string error;  ///< reason when !ok
};

/// Mean TV on the grid n_list × R_list. The template's w sequence is ignored;
/// every n uses its uniform-type sequence. Cells over budget are flagged.
inline std::vector<SweepCell> rate_sweep(const SynthesisSpec& templ, const std::vector<std::size_t>& n_list,
                                         const std::vector<double>& R_list, const std::vector<std::uint64_t>& seeds) {
  detail::require(!n_list.empty() && !R_list.empty(), "rate_sweep: empty grid");
  std::vector<SweepCell> out;
  for (auto n : n_list)
    for (double R : R_list) {
      SweepCell cell;
      cell.n = n;
      cell.R = R;
      cell.seed_count = seeds.size();
      SynthesisSpec s = templ;
      s.n = n;
      s.R = R;
      s.w_seq.clear();
      s.seeds = seeds;
      try {
        const auto r = synthesize(s);
        cell.threshold = r.threshold;
        cell.mean_tv = r.mean_tv;
        cell.ok = true;
      } catch (const BudgetError& e) {
        cell.error = e.what();
      }
      out.push_back(cell);
    }
  return out;
}

}  // namespace rdp

#endif  // RDP_SOFT_COVERING_HPP
