#ifndef RDP_CODING_HPP
#define RDP_CODING_HPP

// Finite-blocklength simulation of the likelihood-encoder scheme with
// common randomness and side information.
//
// A scheme is a factorized law P̄(z) P̄(u|z) P̄(x|z,u) P̄(y|z,u). The codebook
// holds ⌊2^{nR}⌋ · ⌊2^{nR0}⌋ codewords per side-information sequence z^n,
// drawn i.i.d. from ∏ P̄(u_i|z_i); the encoder picks message m with
// probability ∝ ∏ P̄(x_i|z_i,u_i(z^n,m,m0)); the decoder draws
// y_i ~ P̄(y|z_i,u_i).
//
// Codewords are never stored. In explicit mode, symbol i of u^n(z^n,m,m0) is
//
//   inverse_cdf(P̄(·|z_i), unit(prf(codebook_seed, {digest(z^n), m, m0, i})))
//
// with m and m0 one-based. When ⌊2^{nR}⌋ is too large to scan, ensemble
// mode draws a fresh codebook for every trial through its joint-type
// statistics: the number of codewords of each conditional type (given the
// cells of (x^n, z^n)) is Poisson with mean ⌊2^{nR}⌋·P(type), the encoder
// picks a type with probability ∝ count × likelihood, and the codeword is
// placed uniformly inside that type class.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"
#include "rdp/product_tv.hpp"
#include "rdp/random.hpp"
#include "rdp/solver.hpp"

namespace rdp {

/// Factorized base law P̄_{XYZU} of the scheme.
class SchemeSpec {
 public:
  SchemeSpec(JointTable p_xz, Channel u_given_z, Channel x_given_zu, Channel y_given_zu, DistortionMatrix d)
      : p_xz_(std::move(p_xz)),
        u_given_z_(std::move(u_given_z)),
        x_given_zu_(std::move(x_given_zu)),
        y_given_zu_(std::move(y_given_zu)),
        d_(std::move(d)) {
    detail::require(p_xz_.rank() == 2, "SchemeSpec: p_xz must have axes (x, z)");
    const std::size_t X = x_size(), Z = z_size();
    detail::require(u_given_z_.in_dims() == std::vector<std::size_t>{Z}, "SchemeSpec: u_given_z must be indexed by z");
    const std::size_t U = u_size();
    detail::require(x_given_zu_.in_dims() == std::vector<std::size_t>{Z, U} && x_given_zu_.out_dim() == X,
                    "SchemeSpec: x_given_zu must map (z, u) to x");
    detail::require(y_given_zu_.in_dims() == std::vector<std::size_t>{Z, U},
                    "SchemeSpec: y_given_zu must be indexed by (z, u)");
    detail::require(d_.rows() == X && d_.cols() == y_size(), "SchemeSpec: distortion matrix must be |X| x |Y|");
    pz_.assign(Z, 0.0);
    for (std::size_t x = 0; x < X; ++x)
      for (std::size_t z = 0; z < Z; ++z) pz_[z] += p_xz_[x * Z + z];
    for (std::size_t z = 0; z < Z; ++z) {
      if (pz_[z] <= 0.0) continue;
      detail::require(u_given_z_.defined(z), "SchemeSpec: u_given_z undefined on a positive-mass z");
      for (std::size_t u = 0; u < U; ++u) {
        if (u_given_z_(z, u) <= 0.0) continue;
        detail::require(x_given_zu_.defined(z * U + u) && y_given_zu_.defined(z * U + u),
                        "SchemeSpec: channel row undefined on a positive-mass (z, u)");
      }
      for (std::size_t x = 0; x < X; ++x) {
        double v = 0.0;
        for (std::size_t u = 0; u < U; ++u)
          if (u_given_z_(z, u) > 0.0) v += pz_[z] * u_given_z_(z, u) * x_given_zu_(z * U + u, x);
        detail::require(std::abs(v - p_xz_[x * Z + z]) <= 1e-9,
                        "SchemeSpec: factorization does not reproduce p_xz");
      }
    }
  }

  std::size_t x_size() const { return p_xz_.dim(0); }
  std::size_t z_size() const { return p_xz_.dim(1); }
  std::size_t u_size() const { return u_given_z_.out_dim(); }
  std::size_t y_size() const { return y_given_zu_.out_dim(); }
  const JointTable& p_xz() const { return p_xz_; }
  const Channel& u_given_z() const { return u_given_z_; }
  const Channel& x_given_zu() const { return x_given_zu_; }
  const Channel& y_given_zu() const { return y_given_zu_; }
  const DistortionMatrix& d() const { return d_; }
  double p_z(std::size_t z) const { return pz_[z]; }

  double p_u(std::size_t z, std::size_t u) const { return u_given_z_(z, u); }
  double p_x(std::size_t z, std::size_t u, std::size_t x) const {
    return x_given_zu_.defined(z * u_size() + u) ? x_given_zu_(z * u_size() + u, x) : 0.0;
  }
  double p_y(std::size_t z, std::size_t u, std::size_t y) const {
    return y_given_zu_.defined(z * u_size() + u) ? y_given_zu_(z * u_size() + u, y) : 0.0;
  }

  /// P̄ over X × Y × Z × U.
  JointTable joint() const {
    const std::size_t X = x_size(), Y = y_size(), Z = z_size(), U = u_size();
    std::vector<double> p(X * Y * Z * U, 0.0);
    for (std::size_t x = 0; x < X; ++x)
      for (std::size_t y = 0; y < Y; ++y)
        for (std::size_t z = 0; z < Z; ++z)
          for (std::size_t u = 0; u < U; ++u)
            p[((x * Y + y) * Z + z) * U + u] = pz_[z] * p_u(z, u) * p_x(z, u, x) * p_y(z, u, y);
    return JointTable({X, Y, Z, U}, std::move(p), 1e-9);
  }

  /// I(X;U|Z) under P̄: the message-rate threshold.
  double message_threshold() const {
    const std::size_t a[] = {0}, b[] = {3}, c[] = {2};
    return conditional_mutual_information(joint(), a, b, c);
  }
  /// I(Y;U|Z) under P̄: the threshold for R + R0.
  double sum_threshold() const {
    const std::size_t a[] = {1}, b[] = {3}, c[] = {2};
    return conditional_mutual_information(joint(), a, b, c);
  }
  /// Single-letter E_P̄[D(X,Y)].
  double expected_distortion() const { return rdp::expected_distortion(marginalize(joint(), {0, 1}), d_); }

 private:
  JointTable p_xz_;
  Channel u_given_z_, x_given_zu_, y_given_zu_;
  DistortionMatrix d_;
  std::vector<double> pz_;
};

/// Scheme with U = Y built from a channel P_{Y|XZ}: P̄(u|z) is the output
/// law given z, P̄(x|z,u) the matching backward channel, and Y copies U.
inline SchemeSpec scheme_from_channel(const ProblemSpec& spec, const Channel& w) {
  const std::size_t X = spec.x_size(), Z = spec.z_size(), Y = spec.y_size;
  detail::require(w.in_dims() == std::vector<std::size_t>{X, Z} && w.out_dim() == Y,
                  "scheme_from_channel: channel shape does not match the problem");
  std::vector<double> xzu(X * Z * Y, 0.0);
  for (std::size_t x = 0; x < X; ++x)
    for (std::size_t z = 0; z < Z; ++z)
      for (std::size_t y = 0; y < Y; ++y)
        if (spec.p(x, z) > 0.0) xzu[(x * Z + z) * Y + y] = spec.p(x, z) * w(x * Z + z, y);
  const JointTable j({X, Z, Y}, std::move(xzu), 1e-9);
  const JointTable zux = marginalize(j, {1, 2, 0});
  const JointTable zu = marginalize(j, {1, 2});
  auto u_given_z = condition(zu, 1);
  auto x_given_zu = condition(zux, 2);
  std::vector<double> id(Z * Y * Y, 0.0);
  for (std::size_t r = 0; r < Z * Y; ++r) id[r * Y + r % Y] = 1.0;
  Channel y_given_zu({Z, Y}, Y, std::move(id));
  return SchemeSpec(spec.p_xz, std::move(u_given_z), std::move(x_given_zu), std::move(y_given_zu), spec.d);
}

/// ⌊2^bits⌋, exactly when it fits in 62 bits.
struct IndexCount {
  double bits = 0.0;
  std::uint64_t value = 0;  ///< valid when `fits`
  bool fits = false;
  double log_value() const { return fits ? std::log(static_cast<double>(value)) : bits * detail::kLn2; }
};

inline IndexCount floor_pow2(double bits) {
  IndexCount c;
  c.bits = bits;
  if (bits < 62.0) {
    // Relative slack absorbs n·R products that land a rounding error below an integer exponent.
    c.value = static_cast<std::uint64_t>(std::floor(std::exp2(bits) * (1.0 + 1e-12)));
    c.value = std::max<std::uint64_t>(c.value, 1);
    c.fits = true;
  }
  return c;
}

struct CodeConfig {
  std::size_t n = 1;
  double R = 0.0;   ///< message rate, bits/symbol
  double R0 = 0.0;  ///< common-randomness rate, bits/symbol
  std::uint64_t master_seed = 1;
  std::size_t trials = 100;

  void validate() const {
    detail::require(n >= 1, "CodeConfig: n must be >= 1");
    detail::require(std::isfinite(R) && R >= 0.0 && std::isfinite(R0) && R0 >= 0.0,
                    "CodeConfig: rates must be finite and >= 0");
  }
  IndexCount messages() const { return floor_pow2(static_cast<double>(n) * R); }
  IndexCount randomness() const { return floor_pow2(static_cast<double>(n) * R0); }
};

enum class CodebookMode { automatic, explicit_codebook, ensemble };

/// Largest message count scanned explicitly by the encoder in automatic mode.
inline constexpr std::uint64_t kExplicitMessageLimit = std::uint64_t{1} << 20;

class Codebook {
 public:
  Codebook(SchemeSpec scheme, CodeConfig config, std::uint64_t codebook_seed,
           CodebookMode mode = CodebookMode::automatic)
      : scheme_(std::move(scheme)), config_(config), seed_(codebook_seed) {
    config_.validate();
    M_ = config_.messages();
    K_ = config_.randomness();
    const bool scannable = M_.fits && M_.value <= kExplicitMessageLimit && K_.fits;
    if (mode == CodebookMode::automatic) mode = scannable ? CodebookMode::explicit_codebook : CodebookMode::ensemble;
    detail::require(mode != CodebookMode::explicit_codebook || (M_.fits && K_.fits),
                    "Codebook: explicit mode needs message and randomness counts below 2^62");
    ensemble_ = mode == CodebookMode::ensemble;
  }

  /// Codebook whose codeword (z^n, m, m0) is the (m − 1)-th sequence of U^n
  /// in lexicographic order (ignoring z^n and m0), for exhaustive checks.
  static Codebook complete(SchemeSpec scheme, CodeConfig config) {
    Codebook cb(std::move(scheme), config, 0, CodebookMode::explicit_codebook);
    cb.complete_ = true;
    return cb;
  }

  const SchemeSpec& scheme() const { return scheme_; }
  const CodeConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  bool ensemble() const { return ensemble_; }
  bool enumerating() const { return complete_; }
  const IndexCount& messages() const { return M_; }
  const IndexCount& randomness() const { return K_; }

 private:
  SchemeSpec scheme_;
  CodeConfig config_;
  std::uint64_t seed_;
  IndexCount M_, K_;
  bool ensemble_ = false;
  bool complete_ = false;
};

struct TrialResult {
  double distortion = 0.0;
  double empirical_tv = 0.0;
  std::int64_t message = 0;            ///< one-based; −1 when not materialized
  std::int64_t common_randomness = 0;  ///< one-based; −1 when not materialized
};

namespace detail {

inline void check_sequence(std::span<const std::size_t> s, std::size_t n, std::size_t k, const char* what) {
  require(s.size() == n, std::string(what) + ": sequence length differs from n");
  for (auto a : s) require(a < k, std::string(what) + ": symbol out of range");
}

inline void check_index(const IndexCount& c, std::int64_t i, const char* what) {
  require(i >= 1 && (!c.fits || static_cast<std::uint64_t>(i) <= c.value), std::string(what) + ": index out of range");
}

inline double sequence_distortion(const DistortionMatrix& d, std::span<const std::size_t> x,
                                  std::span<const std::size_t> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += d(x[i], y[i]);
  return std::clamp(s / static_cast<double>(x.size()), 0.0, d.d_max());
}

inline double sequence_empirical_tv(std::span<const std::size_t> x, std::size_t kx, std::span<const std::size_t> y,
                                    std::size_t ky) {
  const std::size_t k = std::max(kx, ky);
  std::vector<std::size_t> cx(k, 0), cy(k, 0);
  for (auto a : x) ++cx[a];
  for (auto b : y) ++cy[b];
  return empirical_tv(cx, cy, x.size());
}

}  // namespace detail

/// u^n(z^n, m, m0); one-based indices.
inline std::vector<std::size_t> codeword(const Codebook& cb, std::span<const std::size_t> zn, std::int64_t m,
                                         std::int64_t m0) {
  const auto& S = cb.scheme();
  const std::size_t n = cb.config().n;
  detail::require(!cb.ensemble(), "codeword: ensemble codebooks do not index codewords");
  detail::check_sequence(zn, n, S.z_size(), "codeword");
  detail::check_index(cb.messages(), m, "codeword");
  detail::check_index(cb.randomness(), m0, "codeword");
  std::vector<std::size_t> u(n);
  if (cb.enumerating()) {
    std::uint64_t v = static_cast<std::uint64_t>(m - 1);
    for (std::size_t i = n; i-- > 0;) {
      u[i] = v % S.u_size();
      v /= S.u_size();
    }
    return u;
  }
  const std::uint64_t dz = sequence_digest(zn);
  std::vector<double> row(S.u_size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < S.u_size(); ++a) row[a] = S.p_u(zn[i], a);
    const double r = unit_from(prf(cb.seed(), {dz, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(m0), i}));
    u[i] = inverse_cdf(row, r);
  }
  return u;
}

namespace detail {

inline double log_likelihood(const SchemeSpec& S, std::span<const std::size_t> xn, std::span<const std::size_t> zn,
                             std::span<const std::size_t> un) {
  double l = 0.0;
  for (std::size_t i = 0; i < xn.size(); ++i) {
    const double p = S.p_x(zn[i], un[i], xn[i]);
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    l += std::log(p);
  }
  return l;
}

// Relative weights below e^-700 are treated as zero.
inline constexpr double kLogWeightFloor = -700.0;

inline std::vector<std::size_t> decode_codeword(const SchemeSpec& S, std::span<const std::size_t> un,
                                                std::span<const std::size_t> zn, std::uint64_t trial_seed) {
  std::vector<std::size_t> y(un.size());
  std::vector<double> row(S.y_size());
  for (std::size_t i = 0; i < un.size(); ++i) {
    for (std::size_t b = 0; b < S.y_size(); ++b) row[b] = S.p_y(zn[i], un[i], b);
    y[i] = inverse_cdf(row, unit_from(prf(trial_seed, {4, i})));
  }
  return y;
}

}  // namespace detail

/// Samples m ∝ ∏ P̄(x_i | z_i, u_i(z^n, m, m0)) using uniform
/// unit(prf(trial_seed, {3, 0})).
inline std::int64_t likelihood_encode(const Codebook& cb, std::span<const std::size_t> xn,
                                      std::span<const std::size_t> zn, std::int64_t m0, std::uint64_t trial_seed) {
  const auto& S = cb.scheme();
  detail::require(!cb.ensemble(), "likelihood_encode: ensemble codebooks do not index messages");
  detail::check_sequence(xn, cb.config().n, S.x_size(), "likelihood_encode");
  detail::check_sequence(zn, cb.config().n, S.z_size(), "likelihood_encode");
  detail::check_index(cb.randomness(), m0, "likelihood_encode");
  const std::uint64_t M = cb.messages().value;
  std::vector<double> lw(M);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::uint64_t m = 0; m < M; ++m) {
    const auto u = codeword(cb, zn, static_cast<std::int64_t>(m + 1), m0);
    lw[m] = detail::log_likelihood(S, xn, zn, u);
    mx = std::max(mx, lw[m]);
  }
  if (!std::isfinite(mx)) throw EncodingFailure("likelihood_encode: every codeword gives the source likelihood 0");
  double total = 0.0;
  for (auto& v : lw) {
    v = v - mx < detail::kLogWeightFloor ? 0.0 : std::exp(v - mx);
    total += v;
  }
  const double target = unit_from(prf(trial_seed, {3, 0})) * total;
  double c = 0.0;
  std::uint64_t last = 0;
  for (std::uint64_t m = 0; m < M; ++m) {
    if (lw[m] <= 0.0) continue;
    last = m;
    c += lw[m];
    if (target < c) return static_cast<std::int64_t>(m + 1);
  }
  return static_cast<std::int64_t>(last + 1);
}

/// y_i ~ P̄(y | z_i, u_i(z^n, m, m0)) using uniforms unit(prf(trial_seed, {4, i})).
inline std::vector<std::size_t> decode(const Codebook& cb, std::int64_t m, std::span<const std::size_t> zn,
                                      std::int64_t m0, std::uint64_t trial_seed) {
  const auto u = codeword(cb, zn, m, m0);
  return detail::decode_codeword(cb.scheme(), u, zn, trial_seed);
}

/// Seed of trial `t`: prf(master_seed, {t}).
inline std::uint64_t trial_seed(const Codebook& cb, std::uint64_t t) { return prf(cb.config().master_seed, {t}); }

/// Source block (x^n, z^n) of a trial, drawn i.i.d. from P_XZ with uniforms
/// unit(prf(trial_seed, {1, i})).
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> sample_source(const SchemeSpec& S, std::size_t n,
                                                                                   std::uint64_t seed) {
  std::vector<std::size_t> x(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t f = inverse_cdf(S.p_xz().flat(), unit_from(prf(seed, {1, i})));
    x[i] = f / S.z_size();
    z[i] = f % S.z_size();
  }
  return {std::move(x), std::move(z)};
}

namespace detail {

// Poisson draw: inversion for small means, the standard sampler otherwise.
inline double poisson_draw(double mean, CounterStream& rs) {
  if (mean <= 30.0) {
    double u = rs.next();
    double p = std::exp(-mean), c = p;
    std::size_t k = 0;
    while (u >= c && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      c += p;
    }
    return static_cast<double>(k);
  }
  std::poisson_distribution<long long> dist(mean);
  return static_cast<double>(dist(rs));
}

// Above this log-mean the Poisson count is replaced by its mean.
inline constexpr double kPoissonLogMeanCut = 35.0;

// Ensemble-mode encoder: returns the selected codeword.
inline std::vector<std::size_t> ensemble_encode(const Codebook& cb, std::span<const std::size_t> xn,
                                                std::span<const std::size_t> zn, std::uint64_t seed) {
  const auto& S = cb.scheme();
  const std::size_t X = S.x_size(), Z = S.z_size(), U = S.u_size(), n = xn.size();
  constexpr double ninf = -std::numeric_limits<double>::infinity();

  struct Entry {
    double log_prior, log_lik;
    std::vector<std::size_t> comp;
  };
  std::vector<std::vector<std::size_t>> positions(X * Z);
  for (std::size_t i = 0; i < n; ++i) positions[xn[i] * Z + zn[i]].push_back(i);
  std::vector<std::size_t> cells;
  std::vector<std::vector<Entry>> entries;
  double types = 1.0;
  for (std::size_t c = 0; c < X * Z; ++c) {
    const std::size_t nc = positions[c].size();
    if (nc == 0) continue;
    const std::size_t x = c / Z, z = c % Z;
    std::vector<Entry> list;
    std::vector<std::size_t> comp(U, 0);
    for_each_composition(nc, comp, 0, nc, [&](const std::vector<std::size_t>& k) {
      double lp = std::lgamma(static_cast<double>(nc) + 1.0), ll = 0.0;
      for (std::size_t u = 0; u < U; ++u) {
        if (k[u] == 0) continue;
        const double pu = S.p_u(z, u), px = S.p_x(z, u, x);
        if (pu <= 0.0) return;
        lp += static_cast<double>(k[u]) * std::log(pu) - std::lgamma(static_cast<double>(k[u]) + 1.0);
        ll = px > 0.0 ? ll + static_cast<double>(k[u]) * std::log(px) : ninf;
      }
      if (ll == ninf) return;
      list.push_back({lp, ll, k});
    });
    if (list.empty()) throw EncodingFailure("likelihood_encode: every codeword gives the source likelihood 0");
    types *= static_cast<double>(list.size());
    if (types > 1e7) throw BudgetError("ensemble encoder: more than 1e7 conditional types");
    cells.push_back(c);
    entries.push_back(std::move(list));
  }

  // Reservoir selection over types with weight count × likelihood.
  CounterStream rs(seed, 5);
  const double log_m = cb.messages().log_value();
  std::vector<std::size_t> pick(cells.size(), 0), best(cells.size(), 0);
  double log_total = ninf;
  while (true) {
    double lp = 0.0, ll = 0.0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      lp += entries[k][pick[k]].log_prior;
      ll += entries[k][pick[k]].log_lik;
    }
    const double log_mean = log_m + lp;
    double log_count;
    if (log_mean > kPoissonLogMeanCut) {
      log_count = log_mean;
    } else {
      const double cnt = poisson_draw(std::exp(log_mean), rs);
      log_count = cnt > 0.0 ? std::log(cnt) : ninf;
    }
    if (log_count != ninf) {
      const double lw = log_count + ll;
      const double hi = std::max(log_total, lw);
      log_total = hi + std::log(std::exp(log_total - hi) + std::exp(lw - hi));
      if (rs.next() < std::exp(lw - log_total)) best = pick;
    }
    std::size_t k = cells.size();
    while (k-- > 0) {
      if (++pick[k] < entries[k].size()) break;
      pick[k] = 0;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  if (log_total == ninf) throw EncodingFailure("likelihood_encode: no codeword gives the source positive likelihood");

  CounterStream shuffler(seed, 6);
  std::vector<std::size_t> u(n);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& comp = entries[k][best[k]].comp;
    std::vector<std::size_t> symbols;
    for (std::size_t a = 0; a < U; ++a) symbols.insert(symbols.end(), comp[a], a);
    shuffle_with(symbols, shuffler);
    const auto& pos = positions[cells[k]];
    for (std::size_t t = 0; t < pos.size(); ++t) u[pos[t]] = symbols[t];
  }
  return u;
}

}  // namespace detail

/// One operational realization: source block, common randomness, encoding,
/// decoding and the two block measurements. Randomness comes from
/// trial_seed(cb, trial_index): streams 1 (source), 2 (m0), 3 (encoder),
/// 4 (decoder), 5 and 6 (ensemble encoder).
inline TrialResult run_trial(const Codebook& cb, std::uint64_t trial_index) {
  const auto& S = cb.scheme();
  const std::size_t n = cb.config().n;
  const std::uint64_t seed = trial_seed(cb, trial_index);
  const auto [x, z] = sample_source(S, n, seed);
  TrialResult r;
  std::vector<std::size_t> u;
  CounterStream k_stream(seed, 2);
  r.common_randomness = cb.randomness().fits ? static_cast<std::int64_t>(k_stream.below(cb.randomness().value) + 1) : -1;
  if (cb.ensemble()) {
    u = detail::ensemble_encode(cb, x, z, seed);
    r.message = -1;
  } else {
    r.message = likelihood_encode(cb, x, z, r.common_randomness, seed);
    u = codeword(cb, z, r.message, r.common_randomness);
  }
  const auto y = detail::decode_codeword(S, u, z, seed);
  r.distortion = detail::sequence_distortion(S.d(), x, y);
  r.empirical_tv = detail::sequence_empirical_tv(x, S.x_size(), y, S.y_size());
  return r;
}

struct SimReport {
  double mean_distortion = 0.0, mean_empirical_tv = 0.0;
  double ci95_distortion = 0.0, ci95_tv = 0.0;  ///< normal-approximation half-widths
  std::size_t trials = 0;    ///< trials attempted
  std::size_t failures = 0;  ///< encoding failures (excluded from the means)
};

struct SimRun {
  SimReport report;
  std::vector<std::optional<TrialResult>> per_trial;  ///< empty entry: encoding failure
};

/// Summary over per-trial results in index order.
inline SimReport summarize(const std::vector<std::optional<TrialResult>>& per_trial) {
  SimReport rep;
  rep.trials = per_trial.size();
  double sd = 0.0, st = 0.0;
  std::size_t ok = 0;
  for (const auto& t : per_trial) {
    if (!t) continue;
    ++ok;
    sd += t->distortion;
    st += t->empirical_tv;
  }
  rep.failures = rep.trials - ok;
  if (ok == 0) throw EncodingFailure("monte_carlo: every trial failed to encode");
  rep.mean_distortion = sd / static_cast<double>(ok);
  rep.mean_empirical_tv = st / static_cast<double>(ok);
  if (ok >= 2) {
    double vd = 0.0, vt = 0.0;
    for (const auto& t : per_trial) {
      if (!t) continue;
      vd += (t->distortion - rep.mean_distortion) * (t->distortion - rep.mean_distortion);
      vt += (t->empirical_tv - rep.mean_empirical_tv) * (t->empirical_tv - rep.mean_empirical_tv);
    }
    const double m = static_cast<double>(ok);
    rep.ci95_distortion = 1.959963984540054 * std::sqrt(vd / (m - 1.0) / m);
    rep.ci95_tv = 1.959963984540054 * std::sqrt(vt / (m - 1.0) / m);
  }
  return rep;
}

/// Runs trials 0 … trials−1 (concurrently, capped by RDP_THREADS).
inline SimRun monte_carlo_run(const Codebook& cb) {
  const std::size_t T = cb.config().trials;
  detail::require(T >= 2, "monte_carlo: need at least 2 trials");
  SimRun run;
  run.per_trial.resize(T);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t t = begin; t < T; t += stride) {
      try {
        run.per_trial[t] = run_trial(cb, t);
      } catch (const EncodingFailure&) {
        run.per_trial[t].reset();
      }
    }
  };
  detail::parallel_strided(T, work);
  run.report = summarize(run.per_trial);
  return run;
}

inline SimReport monte_carlo(const Codebook& cb) { return monte_carlo_run(cb).report; }

// ---------------------------------------------------------------------------
// Exact laws at small n

/// Largest term count enumerated by exact_joint_law.
inline constexpr double kExactLawBudget = 1e7;

/// Laws over (X^n, Y^n, Z^n); sequences are indexed lexicographically with
/// the first symbol most significant.
struct ExactLaws {
  JointTable P;     ///< induced by the encoder and decoder
  JointTable Q;     ///< auxiliary law with uniform (M, K)
  JointTable Pbar;  ///< i.i.d. product of P̄_XYZ
};

namespace detail {

inline std::vector<std::size_t> digits(std::size_t v, std::size_t base, std::size_t n) {
  std::vector<std::size_t> s(n);
  for (std::size_t i = n; i-- > 0;) {
    s[i] = v % base;
    v /= base;
  }
  return s;
}

}  // namespace detail

/// Exact P, Q and P̄ for one codebook realization. Q weights every (m, m0)
/// by 1/(M·K), so it is a distribution for any rates.
inline ExactLaws exact_joint_law(const Codebook& cb) {
  const auto& S = cb.scheme();
  const std::size_t n = cb.config().n, X = S.x_size(), Y = S.y_size(), Z = S.z_size();
  detail::require(!cb.ensemble(), "exact_joint_law: needs an explicit codebook");
  const double terms = std::pow(static_cast<double>(X * Y * Z), static_cast<double>(n)) *
                       static_cast<double>(cb.messages().value) * static_cast<double>(cb.randomness().value);
  if (terms > kExactLawBudget)
    throw BudgetError("exact_joint_law: enumeration of " + std::to_string(terms) + " terms exceeds the budget");
  const std::size_t NX = detail::ipow(X, n), NY = detail::ipow(Y, n), NZ = detail::ipow(Z, n);
  const std::uint64_t M = cb.messages().value, K = cb.randomness().value;
  std::vector<double> P(NX * NY * NZ, 0.0), Q(NX * NY * NZ, 0.0), B(NX * NY * NZ, 0.0);
  double failure = 0.0;

  std::vector<std::vector<std::size_t>> xs(NX), ys(NY);
  for (std::size_t a = 0; a < NX; ++a) xs[a] = detail::digits(a, X, n);
  for (std::size_t b = 0; b < NY; ++b) ys[b] = detail::digits(b, Y, n);

  for (std::size_t zi = 0; zi < NZ; ++zi) {
    const auto zs = detail::digits(zi, Z, n);
    double pz = 1.0;
    for (auto z : zs) pz *= S.p_z(z);
    if (pz <= 0.0) continue;
    for (std::uint64_t k = 1; k <= K; ++k) {
      // Per-message likelihood of each x^n and decoder law of each y^n.
      std::vector<double> lx(M * NX), gy(M * NY);
      for (std::uint64_t m = 0; m < M; ++m) {
        const auto u = codeword(cb, zs, static_cast<std::int64_t>(m + 1), static_cast<std::int64_t>(k));
        for (std::size_t a = 0; a < NX; ++a) {
          double v = 1.0;
          for (std::size_t i = 0; i < n; ++i) v *= S.p_x(zs[i], u[i], xs[a][i]);
          lx[m * NX + a] = v;
        }
        for (std::size_t b = 0; b < NY; ++b) {
          double v = 1.0;
          for (std::size_t i = 0; i < n; ++i) v *= S.p_y(zs[i], u[i], ys[b][i]);
          gy[m * NY + b] = v;
        }
      }
      for (std::size_t a = 0; a < NX; ++a) {
        double pxz = 1.0;
        for (std::size_t i = 0; i < n; ++i) pxz *= S.p_xz()[xs[a][i] * Z + zs[i]];
        double norm = 0.0;
        for (std::uint64_t m = 0; m < M; ++m) norm += lx[m * NX + a];
        if (pxz > 0.0 && norm <= 0.0) failure += pxz / static_cast<double>(K);
        for (std::uint64_t m = 0; m < M; ++m) {
          const double l = lx[m * NX + a];
          if (l <= 0.0) continue;
          const double fp = pxz > 0.0 ? pxz / static_cast<double>(K) * l / norm : 0.0;
          const double fq = pz * l / static_cast<double>(M * K);
          for (std::size_t b = 0; b < NY; ++b) {
            const double g = gy[m * NY + b];
            if (g <= 0.0) continue;
            P[(a * NY + b) * NZ + zi] += fp * g;
            Q[(a * NY + b) * NZ + zi] += fq * g;
          }
        }
      }
    }
  }
  // P̄_XYZ single letter, then its i.i.d. product.
  const auto bar = marginalize(S.joint(), {0, 1, 2});
  for (std::size_t a = 0; a < NX; ++a)
    for (std::size_t b = 0; b < NY; ++b)
      for (std::size_t zi = 0; zi < NZ; ++zi) {
        const auto zs = detail::digits(zi, Z, n);
        double v = 1.0;
        for (std::size_t i = 0; i < n; ++i) v *= bar.at({xs[a][i], ys[b][i], zs[i]});
        B[(a * NY + b) * NZ + zi] = v;
      }
  if (failure > 0.0)
    throw EncodingFailure("exact_joint_law: source mass " + std::to_string(failure) +
                          " has likelihood 0 under every codeword");
  return ExactLaws{JointTable({NX, NY, NZ}, std::move(P), 1e-9), JointTable({NX, NY, NZ}, std::move(Q), 1e-9),
                   JointTable({NX, NY, NZ}, std::move(B), 1e-9)};
}

struct ProofDiagnostics {
  double tv_P_Q = 0.0;        ///< d_TV(P_{X^nY^n}, Q_{X^nY^n})
  double tv_Q_Pbar_YZ = 0.0;  ///< d_TV(Q_{Y^nZ^n}, P̄_{Y^nZ^n})
  double tv_P_Pbar = 0.0;     ///< d_TV(P_{X^nY^n}, P̄_{X^nY^n})
  double strong_tv = 0.0;     ///< d_TV(P_{X^n}, P_{Y^n})
  double per_letter_max_tv = 0.0;      ///< max_i d_TV(P_{X_i}, P_{Y_i})
  double time_mixed_tv = 0.0;          ///< d_TV(P_{X_T}, P_{Y_T}), T uniform on [n]
  double expected_empirical_tv = 0.0;  ///< E_P[d_TV(P̂_{x^n}, P̂_{y^n})]
  double expected_distortion = 0.0;    ///< E_P[D(x^n, y^n)]
};

struct DiagnosticsReport {
  std::vector<std::uint64_t> seeds;
  std::vector<ProofDiagnostics> per_seed;
  ProofDiagnostics mean;
  double message_threshold = 0.0;  ///< I(X;U|Z)
  double sum_threshold = 0.0;      ///< I(Y;U|Z)
};

inline ProofDiagnostics diagnose(const Codebook& cb, const ExactLaws& L) {
  const auto& S = cb.scheme();
  const std::size_t n = cb.config().n, X = S.x_size(), Y = S.y_size(), A = std::max(X, Y);
  ProofDiagnostics d;
  const auto pxy = marginalize(L.P, {0, 1});
  d.tv_P_Q = tv_distance(pxy, marginalize(L.Q, {0, 1}));
  d.tv_Q_Pbar_YZ = tv_distance(marginalize(L.Q, {1, 2}), marginalize(L.Pbar, {1, 2}));
  d.tv_P_Pbar = tv_distance(pxy, marginalize(L.Pbar, {0, 1}));

  const std::size_t NX = pxy.dim(0), NY = pxy.dim(1);
  // Both block marginals on the padded sequence space A^n.
  std::vector<double> px(detail::ipow(A, n), 0.0), py(px.size(), 0.0);
  std::vector<std::vector<double>> lx(n, std::vector<double>(A, 0.0)), ly = lx;
  std::vector<double> tx(A, 0.0), ty(A, 0.0);
  auto padded = [&](const std::vector<std::size_t>& s) {
    std::size_t v = 0;
    for (auto a : s) v = v * A + a;
    return v;
  };
  for (std::size_t a = 0; a < NX; ++a) {
    const auto xs = detail::digits(a, X, n);
    for (std::size_t b = 0; b < NY; ++b) {
      const double p = pxy[a * NY + b];
      if (p <= 0.0) continue;
      const auto ys = detail::digits(b, Y, n);
      px[padded(xs)] += p;
      py[padded(ys)] += p;
      for (std::size_t i = 0; i < n; ++i) {
        lx[i][xs[i]] += p;
        ly[i][ys[i]] += p;
      }
      d.expected_empirical_tv += p * detail::sequence_empirical_tv(xs, X, ys, Y);
      d.expected_distortion += p * detail::sequence_distortion(S.d(), xs, ys);
    }
  }
  d.strong_tv = tv_distance(px, py);
  for (std::size_t i = 0; i < n; ++i) {
    d.per_letter_max_tv = std::max(d.per_letter_max_tv, tv_distance(lx[i], ly[i]));
    for (std::size_t a = 0; a < A; ++a) {
      tx[a] += lx[i][a] / static_cast<double>(n);
      ty[a] += ly[i][a] / static_cast<double>(n);
    }
  }
  d.time_mixed_tv = tv_distance(tx, ty);
  return d;
}

/// Exact diagnostics for each codebook seed, and their mean.
inline DiagnosticsReport proof_diagnostics(const SchemeSpec& scheme, const CodeConfig& config,
                                           const std::vector<std::uint64_t>& seeds) {
  detail::require(!seeds.empty(), "proof_diagnostics: no codebook seeds");
  DiagnosticsReport rep;
  rep.seeds = seeds;
  rep.message_threshold = scheme.message_threshold();
  rep.sum_threshold = scheme.sum_threshold();
  for (auto s : seeds) {
    const Codebook cb(scheme, config, s, CodebookMode::explicit_codebook);
    rep.per_seed.push_back(diagnose(cb, exact_joint_law(cb)));
  }
  const double k = static_cast<double>(seeds.size());
  for (const auto& d : rep.per_seed) {
    rep.mean.tv_P_Q += d.tv_P_Q / k;
    rep.mean.tv_Q_Pbar_YZ += d.tv_Q_Pbar_YZ / k;
    rep.mean.tv_P_Pbar += d.tv_P_Pbar / k;
    rep.mean.strong_tv += d.strong_tv / k;
    rep.mean.per_letter_max_tv += d.per_letter_max_tv / k;
    rep.mean.time_mixed_tv += d.time_mixed_tv / k;
    rep.mean.expected_empirical_tv += d.expected_empirical_tv / k;
    rep.mean.expected_distortion += d.expected_distortion / k;
  }
  return rep;
}

}  // namespace rdp

#endif  // RDP_CODING_HPP
