#ifndef RDP_CONVERSE_HPP
#define RDP_CONVERSE_HPP

// Search-based check of the empirical-perception converse over small
// deterministic codes without common randomness. A code maps (x^n, z^n) to a
// message and (m, z^n) to y^n. Its single-letter footprint is the law of
// (X_T, Y_T, Z_T) at a uniform time T, and the check asks that
//
//   log2(M) / n  ≥  R^(e)(E[D], d_TV(P_{X_T}, P_{Y_T})).
//
// Sequences are indexed lexicographically with the first symbol most
// significant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"
#include "rdp/random.hpp"
#include "rdp/solver.hpp"

namespace rdp {

/// Largest |X^n × Z^n| an evaluation enumerates, and largest exhaustive search space.
inline constexpr double kCodeEvalBudget = 1e6;
inline constexpr double kCodeSearchBudget = 1e6;

struct SmallCode {
  std::size_t n = 1;
  std::size_t M = 1;
  std::vector<std::size_t> encoder;  ///< [x^n · |Z|^n + z^n] → m ∈ [0, M)
  std::vector<std::size_t> decoder;  ///< [m · |Z|^n + z^n] → y^n index

  void validate(const ProblemSpec& spec) const {
    detail::require(n >= 1, "SmallCode: n must be >= 1");
    detail::require(M >= 1, "SmallCode: M must be >= 1");
    const double xn = std::pow(static_cast<double>(spec.x_size()), static_cast<double>(n));
    const double zn = std::pow(static_cast<double>(spec.z_size()), static_cast<double>(n));
    const double yn = std::pow(static_cast<double>(spec.y_size), static_cast<double>(n));
    if (xn * zn > kCodeEvalBudget || yn > kCodeEvalBudget)
      throw BudgetError("SmallCode: block alphabets exceed the evaluation budget");
    detail::require(encoder.size() == static_cast<std::size_t>(xn * zn), "SmallCode: encoder is not total");
    detail::require(decoder.size() == M * static_cast<std::size_t>(zn), "SmallCode: decoder is not total");
    for (auto m : encoder) detail::require(m < M, "SmallCode: encoder message out of range");
    for (auto y : decoder) detail::require(y < static_cast<std::size_t>(yn), "SmallCode: decoder output out of range");
  }

  std::string describe() const {
    std::ostringstream os;
    os << "n=" << n << " M=" << M << " enc=[";
    for (std::size_t i = 0; i < encoder.size(); ++i) os << (i ? "," : "") << encoder[i];
    os << "] dec=[";
    for (std::size_t i = 0; i < decoder.size(); ++i) os << (i ? "," : "") << decoder[i];
    os << "]";
    return os.str();
  }
};

struct CodeEvaluation {
  double rate = 0.0;           ///< log2(M) / n
  double distortion = 0.0;     ///< E[(1/n) Σ d(X_i, Y_i)]
  double perception_tv = 0.0;  ///< d_TV(P_{X_T}, P_{Y_T})
  JointTable time_mixed_joint;  ///< law of (X_T, Y_T, Z_T)
  double expected_empirical_tv = 0.0;  ///< E[d_TV(P̂_{X^n}, P̂_{Y^n})]
};

namespace detail {

inline void unpack(std::size_t index, std::size_t base, std::vector<std::size_t>& out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = index % base;
    index /= base;
  }
}

}  // namespace detail

inline CodeEvaluation evaluate_code(const SmallCode& code, const ProblemSpec& spec) {
  code.validate(spec);
  const std::size_t n = code.n, X = spec.x_size(), Y = spec.y_size, Z = spec.z_size();
  const std::size_t K = spec.tv_alphabet();
  const std::size_t Xn = detail::ipow(X, n), Zn = detail::ipow(Z, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<std::size_t> xs(n), zs(n), ys(n), cx(K), cy(K);
  std::vector<double> joint(X * Y * Z, 0.0);
  CodeEvaluation ev;
  ev.rate = std::log2(static_cast<double>(code.M)) / static_cast<double>(n);
  for (std::size_t xi = 0; xi < Xn; ++xi) {
    detail::unpack(xi, X, xs);
    for (std::size_t zi = 0; zi < Zn; ++zi) {
      detail::unpack(zi, Z, zs);
      double pr = 1.0;
      for (std::size_t i = 0; i < n && pr > 0.0; ++i) pr *= spec.p(xs[i], zs[i]);
      if (pr <= 0.0) continue;
      const std::size_t m = code.encoder[xi * Zn + zi];
      detail::unpack(code.decoder[m * Zn + zi], Y, ys);
      std::fill(cx.begin(), cx.end(), 0);
      std::fill(cy.begin(), cy.end(), 0);
      double dist = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dist += spec.d(xs[i], ys[i]);
        joint[(xs[i] * Y + ys[i]) * Z + zs[i]] += pr * inv_n;
        ++cx[xs[i]];
        ++cy[ys[i]];
      }
      ev.distortion += pr * dist * inv_n;
      ev.expected_empirical_tv += pr * empirical_tv(cx, cy, n);
    }
  }
  ev.time_mixed_joint = JointTable({X, Y, Z}, std::move(joint), 1e-9);
  const auto px = marginal(ev.time_mixed_joint, 0), py = marginal(ev.time_mixed_joint, 1);
  ev.perception_tv = tv_distance_padded(px.masses(), py.masses());
  return ev;
}

struct ConverseViolation {
  std::string code;
  double rate = 0.0, delta = 0.0, pi = 0.0;
  double solver_rate = 0.0;
  double dual_bound = 0.0;
};

struct ConverseReport {
  std::size_t codes_checked = 0;
  std::size_t screened = 0;       ///< codes cleared by a grid corner below their footprint
  std::size_t points_solved = 0;  ///< solver calls, grid corners included
  std::vector<ConverseViolation> violations;  ///< rate < dual_bound − tol
  std::size_t unresolved = 0;  ///< dual_bound − tol ≤ rate < solver_rate − tol
  double min_margin = std::numeric_limits<double>::infinity();  ///< min rate − (smallest upper bound found)
  double min_sandwich_slack = std::numeric_limits<double>::infinity();  ///< min E[emp tv] − perception_tv
};

/// Grid resolutions for the monotone screen, coarse first.
inline constexpr std::size_t kScreenLevels[] = {8, 32};

namespace detail {

struct CodeFootprint {
  double rate, delta, pi, slack;
};

// Solves every distinct target of `keys` once, in parallel.
template <class Key>
std::map<Key, RDPSolution> solve_targets(const ProblemSpec& spec, const std::map<Key, std::pair<double, double>>& targets,
                                         const SolverConfig& cfg) {
  std::vector<std::pair<Key, std::pair<double, double>>> jobs(targets.begin(), targets.end());
  std::vector<RDPSolution> sols(jobs.size());
  parallel_strided(jobs.size(), [&](std::size_t begin, std::size_t stride) {
    for (std::size_t k = begin; k < jobs.size(); k += stride)
      sols[k] = solve_empirical_rdp(spec, jobs[k].second.first, jobs[k].second.second, cfg);
  });
  std::map<Key, RDPSolution> out;
  for (std::size_t k = 0; k < jobs.size(); ++k) out.emplace(jobs[k].first, std::move(sols[k]));
  return out;
}

// R^(e) is nonincreasing in (Δ, Π), and a solver rate is attained by a
// feasible channel, so rate ≥ solver(Δ', Π') with Δ' ≤ Δ, Π' ≤ Π clears a
// code. Codes left after every screen level are solved at their own
// footprint; nearly equal footprints share one solve at the smallest member.
inline ConverseReport certify(const ProblemSpec& spec, const std::vector<SmallCode>& codes,
                              const std::vector<CodeFootprint>& fp, double tol, const SolverConfig& cfg) {
  using Key = std::pair<long long, long long>;
  ConverseReport rep;
  rep.codes_checked = fp.size();
  std::vector<double> bound(fp.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> pending(fp.size());
  for (std::size_t c = 0; c < fp.size(); ++c) {
    pending[c] = c;
    rep.min_sandwich_slack = std::min(rep.min_sandwich_slack, fp[c].slack);
  }
  for (std::size_t h : kScreenLevels) {
    const double hd = static_cast<double>(h);
    auto key = [&](const CodeFootprint& f) {
      return Key(static_cast<long long>(std::floor(f.delta * hd)), static_cast<long long>(std::floor(f.pi * hd)));
    };
    std::map<Key, std::pair<double, double>> targets;
    for (auto c : pending) {
      const Key k = key(fp[c]);
      targets.emplace(k, std::pair(static_cast<double>(k.first) / hd, std::min(1.0, static_cast<double>(k.second) / hd)));
    }
    const auto sols = solve_targets(spec, targets, cfg);
    rep.points_solved += sols.size();
    std::vector<std::size_t> left;
    for (auto c : pending) {
      const auto& s = sols.at(key(fp[c]));
      if (s.status != SolveStatus::infeasible) bound[c] = std::min(bound[c], s.rate);
      if (fp[c].rate >= bound[c] - tol)
        ++rep.screened;
      else
        left.push_back(c);
    }
    pending.swap(left);
  }
  constexpr double kKeyScale = 1e12;
  auto key = [&](const CodeFootprint& f) { return Key(std::llround(f.delta * kKeyScale), std::llround(f.pi * kKeyScale)); };
  std::map<Key, std::pair<double, double>> targets;
  for (auto c : pending) {
    const auto& f = fp[c];
    auto [it, fresh] = targets.try_emplace(key(f), f.delta, std::min(f.pi, 1.0));
    if (!fresh) it->second = {std::min(it->second.first, f.delta), std::min(it->second.second, f.pi)};
  }
  const auto sols = solve_targets(spec, targets, cfg);
  rep.points_solved += sols.size();
  for (auto c : pending) {
    const auto& f = fp[c];
    const auto& s = sols.at(key(f));
    bound[c] = std::min(bound[c], s.rate);
    if (f.rate < s.dual_bound - tol)
      rep.violations.push_back({codes[c].describe(), f.rate, f.delta, f.pi, s.rate, s.dual_bound});
    else if (f.rate < s.rate - tol)
      ++rep.unresolved;
  }
  for (std::size_t c = 0; c < fp.size(); ++c) rep.min_margin = std::min(rep.min_margin, fp[c].rate - bound[c]);
  return rep;
}

inline CodeFootprint footprint(const SmallCode& code, const ProblemSpec& spec) {
  const auto ev = evaluate_code(code, spec);
  return {ev.rate, ev.distortion, ev.perception_tv, ev.expected_empirical_tv - ev.perception_tv};
}

}  // namespace detail

/// Number of (encoder, decoder) pairs at block length n with M messages.
inline double code_space_size(const ProblemSpec& spec, std::size_t n, std::size_t M) {
  const double xz = std::pow(static_cast<double>(spec.x_size() * spec.z_size()), static_cast<double>(n));
  const double zn = std::pow(static_cast<double>(spec.z_size()), static_cast<double>(n));
  const double yn = std::pow(static_cast<double>(spec.y_size), static_cast<double>(n));
  return std::pow(static_cast<double>(M), xz) * std::pow(yn, static_cast<double>(M) * zn);
}

/// Every deterministic code at (n, M), checked against the solver.
inline ConverseReport exhaustive_check(const ProblemSpec& spec, std::size_t n, std::size_t M, double tol,
                                       const SolverConfig& cfg = {}) {
  detail::require(n >= 1 && M >= 1, "exhaustive_check: n and M must be >= 1");
  detail::require(tol >= 0.0, "exhaustive_check: tol must be >= 0");
  const double space = code_space_size(spec, n, M);
  if (!(space <= kCodeSearchBudget))
    throw BudgetError("exhaustive_check: " + std::to_string(space) + " codes exceed the search budget");
  const std::size_t XZn = detail::ipow(spec.x_size() * spec.z_size(), n);
  const std::size_t Zn = detail::ipow(spec.z_size(), n), Yn = detail::ipow(spec.y_size, n);
  const auto total = static_cast<std::size_t>(space);
  const std::size_t n_enc = detail::ipow(M, XZn);
  std::vector<SmallCode> codes(total);
  for (std::size_t c = 0; c < total; ++c) {
    auto& code = codes[c];
    code.n = n;
    code.M = M;
    code.encoder.resize(XZn);
    code.decoder.resize(M * Zn);
    detail::unpack(c % n_enc, M, code.encoder);
    detail::unpack(c / n_enc, Yn, code.decoder);
  }
  std::vector<detail::CodeFootprint> fp(total);
  detail::parallel_strided(total, [&](std::size_t begin, std::size_t stride) {
    for (std::size_t c = begin; c < total; c += stride) fp[c] = detail::footprint(codes[c], spec);
  });
  return detail::certify(spec, codes, fp, tol, cfg);
}

/// Uniformly drawn codes at (n, M); draw s uses the stream prf(seed, {s, ·}).
inline ConverseReport sampled_check(const ProblemSpec& spec, std::size_t n, std::size_t M, std::size_t samples,
                                    std::uint64_t seed, double tol, const SolverConfig& cfg = {}) {
  detail::require(n >= 1 && M >= 1, "sampled_check: n and M must be >= 1");
  detail::require(tol >= 0.0, "sampled_check: tol must be >= 0");
  if (samples == 0) return {};
  const std::size_t XZn = detail::ipow(spec.x_size() * spec.z_size(), n);
  const std::size_t Zn = detail::ipow(spec.z_size(), n), Yn = detail::ipow(spec.y_size, n);
  std::vector<SmallCode> codes(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    CounterStream rs(seed, s);
    auto& code = codes[s];
    code.n = n;
    code.M = M;
    code.encoder.resize(XZn);
    code.decoder.resize(M * Zn);
    for (auto& m : code.encoder) m = static_cast<std::size_t>(rs.below(M));
    for (auto& y : code.decoder) y = static_cast<std::size_t>(rs.below(Yn));
  }
  std::vector<detail::CodeFootprint> fp(samples);
  detail::parallel_strided(samples, [&](std::size_t begin, std::size_t stride) {
    for (std::size_t c = begin; c < samples; c += stride) fp[c] = detail::footprint(codes[c], spec);
  });
  return detail::certify(spec, codes, fp, tol, cfg);
}

}  // namespace rdp

#endif  // RDP_CONVERSE_HPP
