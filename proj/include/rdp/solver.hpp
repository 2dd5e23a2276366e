#ifndef RDP_SOLVER_HPP
#define RDP_SOLVER_HPP

// Single-letter conditional rate-distortion(-perception) functions.
//
//   R^(e)(Δ, Π) = min I(X;Y|Z)  s.t.  E[D(X,Y)] ≤ Δ,  d_TV(P_X, P_Y) ≤ Π
//
// over channels P_{Y|XZ}. The distortion constraint is priced by λ and the
// perception constraint by ν, both located by bisection (the constraint value
// of a parametric minimizer is monotone in its multiplier). For fixed (λ, ν)
// the Lagrangian I + λ·E[D] + ν·TV is minimized by Blahut-Arimoto alternation
// in which the TV term enters as a per-output potential s ∈ [0, ν]^Y, the
// dual form ν·TV = max_{s∈[0,ν]} s·(P_Y − P_X). The potential is moved by
// multiplicative (Sinkhorn-type) corrections of P_Y toward P_X, clipped to
// the box. Every visited multiplier yields a certified lower bound on the
// optimum through the convexity bound of the Blahut-Arimoto reference law.
//
// Symbols of X and Y are identified by position when comparing P_X and P_Y;
// the shorter alphabet is padded with zero mass.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"

namespace rdp {

struct ProblemSpec {
  JointTable p_xz;  ///< |X| × |Z|, x-major
  std::size_t y_size = 0;
  DistortionMatrix d;  ///< |X| × |Y|

  ProblemSpec() = default;
  ProblemSpec(JointTable p_xz_, std::size_t y_size_, DistortionMatrix d_)
      : p_xz(std::move(p_xz_)), y_size(y_size_), d(std::move(d_)) {
    detail::require(p_xz.rank() == 2, "ProblemSpec: p_xz must have two axes (x, z)");
    detail::require(y_size > 0, "ProblemSpec: empty reconstruction alphabet");
    detail::require(d.rows() == p_xz.dim(0) && d.cols() == y_size,
                    "ProblemSpec: distortion matrix must be |X| x |Y|");
  }

  std::size_t x_size() const { return p_xz.dim(0); }
  std::size_t z_size() const { return p_xz.dim(1); }
  double p(std::size_t x, std::size_t z) const { return p_xz[x * z_size() + z]; }
  ProbVec p_x() const { return marginal(p_xz, 0); }
  ProbVec p_z() const { return marginal(p_xz, 1); }
  /// Width of the padded alphabet on which P_X and P_Y are compared.
  std::size_t tv_alphabet() const { return std::max(x_size(), y_size); }
};

struct SolverConfig {
  int max_outer_iters = 100;            ///< bisection steps per multiplier
  int max_inner_iters = 20000;          ///< alternating-minimization steps per Lagrangian
  double primal_tol = 1e-10;            ///< inner stationarity and objective-monotonicity slack
  double dual_tol = 1e-5;               ///< primal-dual gap required for `converged`
  double constraint_tol = 1e-6;         ///< allowed constraint violation; also the γ slack
  double multiplier_upper_bound = 1e4;  ///< beyond this, a still-violated constraint is infeasible
  double step_init = 1.0;               ///< first multiplier tried when bracketing
  double step_growth = 2.0;             ///< bracket expansion factor
  std::uint64_t seed = 0;               ///< 0: uniform initial channel; otherwise seeded random start

  void validate() const {
    detail::require(max_outer_iters >= 1 && max_inner_iters >= 1, "SolverConfig: iteration caps must be >= 1");
    detail::require(primal_tol > 0 && dual_tol > 0 && constraint_tol > 0,
                    "SolverConfig: tolerances must be positive");
    detail::require(multiplier_upper_bound > 0, "SolverConfig: multiplier bound must be positive");
    detail::require(step_init > 0 && step_growth > 1, "SolverConfig: invalid step schedule");
  }
};

enum class SolveStatus { converged, not_converged, infeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::not_converged: return "not_converged";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "?";
}

struct RDPSolution {
  double rate = 0.0;              ///< I(X;Y|Z) of `channel`, bits
  double operational_rate = 0.0;  ///< rate + constraint_tol (the γ-slackened rate)
  Channel channel;                ///< P_{Y|XZ}, rows indexed (x, z)
  double achieved_distortion = 0.0;
  double achieved_perception_tv = 0.0;
  double lambda_distortion = 0.0;
  double nu_perception = 0.0;  ///< +inf when P_Y = P_X was imposed exactly
  double dual_bound = 0.0;     ///< certified lower bound on the optimum
  bool converged = false;
  SolveStatus status = SolveStatus::not_converged;
  int iterations = 0;
  std::vector<double> objective_history;
};

namespace detail {

inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Evaluates rate, distortion and perception of a channel stored flat as
/// w[(x * |Z| + z) * |Y| + y].
struct ChannelMetrics {
  double rate = 0.0, distortion = 0.0, tv = 0.0;
  std::vector<double> p_y;
};

inline std::vector<double> output_law(const ProblemSpec& P, std::span<const double> w) {
  const std::size_t X = P.x_size(), Z = P.z_size(), Y = P.y_size;
  std::vector<double> py(Y, 0.0);
  for (std::size_t x = 0; x < X; ++x)
    for (std::size_t z = 0; z < Z; ++z) {
      const double pxz = P.p(x, z);
      if (pxz == 0.0) continue;
      const double* row = &w[(x * Z + z) * Y];
      for (std::size_t y = 0; y < Y; ++y) py[y] += pxz * row[y];
    }
  return py;
}

inline ChannelMetrics measure(const ProblemSpec& P, std::span<const double> w, std::span<const double> px,
                              std::span<const double> pz) {
  const std::size_t X = P.x_size(), Z = P.z_size(), Y = P.y_size;
  ChannelMetrics m;
  // r(y|z) · p(z)
  std::vector<double> pyz(Y * Z, 0.0);
  for (std::size_t x = 0; x < X; ++x)
    for (std::size_t z = 0; z < Z; ++z) {
      const double pxz = P.p(x, z);
      if (pxz == 0.0) continue;
      const double* row = &w[(x * Z + z) * Y];
      for (std::size_t y = 0; y < Y; ++y) {
        pyz[y * Z + z] += pxz * row[y];
        m.distortion += pxz * row[y] * P.d(x, y);
      }
    }
  for (std::size_t x = 0; x < X; ++x)
    for (std::size_t z = 0; z < Z; ++z) {
      const double pxz = P.p(x, z);
      if (pxz == 0.0) continue;
      const double* row = &w[(x * Z + z) * Y];
      for (std::size_t y = 0; y < Y; ++y) {
        if (row[y] <= 0.0) continue;
        m.rate += pxz * row[y] * std::log2(row[y] * pz[z] / pyz[y * Z + z]);
      }
    }
  m.rate = std::max(m.rate, 0.0);
  m.distortion = std::clamp(m.distortion, 0.0, P.d.d_max());
  m.p_y.assign(Y, 0.0);
  for (std::size_t y = 0; y < Y; ++y)
    for (std::size_t z = 0; z < Z; ++z) m.p_y[y] += pyz[y * Z + z];
  m.tv = tv_distance_padded(px, m.p_y);
  return m;
}

/// State carried between Lagrangian solves (warm starts).
struct InnerState {
  std::vector<double> w;  ///< channel
  std::vector<double> s;  ///< output potential, bits, one entry per padded symbol
};

struct InnerResult {
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  double dual_value = -kInf;  ///< certified lower bound for the constrained problem at (Δ, Π)
};

class LagrangianSolver {
 public:
  LagrangianSolver(const ProblemSpec& P, const SolverConfig& cfg)
      : P_(P), cfg_(cfg), px_(P.tv_alphabet(), 0.0), pz_(P.p_z().values()) {
    const auto px = P.p_x();
    for (std::size_t x = 0; x < P.x_size(); ++x) px_[x] = px[x];
  }

  const std::vector<double>& p_x_padded() const { return px_; }
  const std::vector<double>& p_z() const { return pz_; }
  ChannelMetrics measure(std::span<const double> w) const { return detail::measure(P_, w, px_, pz_); }

  InnerState initial_state() const {
    const std::size_t X = P_.x_size(), Z = P_.z_size(), Y = P_.y_size;
    InnerState st;
    st.w.assign(X * Z * Y, 1.0 / static_cast<double>(Y));
    if (cfg_.seed != 0) {
      std::mt19937_64 gen(cfg_.seed);
      std::uniform_real_distribution<double> u(0.05, 1.0);
      for (std::size_t r = 0; r < X * Z; ++r) {
        double s = 0.0;
        for (std::size_t y = 0; y < Y; ++y) s += (st.w[r * Y + y] = u(gen));
        for (std::size_t y = 0; y < Y; ++y) st.w[r * Y + y] /= s;
      }
    }
    st.s.assign(P_.tv_alphabet(), 0.0);
    return st;
  }

  /// Lagrangian objective I + λ·E[D] + ν·TV (ν = +inf uses the current
  /// potential range as the effective price).
  double objective(std::span<const double> w, double lambda, double nu, std::span<const double> s) const {
    const auto m = measure(w);
    const double price = std::isfinite(nu) ? nu : potential_range(s);
    return m.rate + lambda * m.distortion + price * m.tv;
  }

  /// I + λ·E[D], the objective under the exact constraint P_Y = P_X.
  double objective_exact(std::span<const double> w, double lambda) const {
    const auto m = measure(w);
    return m.rate + lambda * m.distortion;
  }

  /// Minimizes I + λ·E[D] + ν·TV starting from `st`. `delta` and `pi` only
  /// enter the dual bound.
  InnerResult solve(double lambda, double nu, double delta, double pi, InnerState& st,
                    std::vector<double>* history) const {
    const std::size_t A = P_.tv_alphabet();
    InnerResult res;
    // Keep every entry strictly positive so no output is lost by a warm start.
    mix_with_uniform(st.w, 1e-3);
    if (nu == 0.0) std::fill(st.s.begin(), st.s.end(), 0.0);
    clip_potential(st.s, nu);

    std::vector<double> logr, cand(st.w.size()), trial(st.w.size()), s_cand(A);
    double obj = objective(st.w, lambda, nu, st.s);
    if (history && std::isfinite(nu)) history->push_back(obj);
    for (int it = 1; it <= cfg_.max_inner_iters; ++it) {
      res.iterations = it;
      // Majorize-minimize: with the reference law r fixed, the minimizer of
      // Σ p·w·log(w/r) + λ·E[D] + ν·TV is the channel ∝ r·2^{−λd−s} whose
      // potential s solves the box-constrained marginal-matching problem.
      reference_law(st.w, logr);
      s_cand = st.s;
      solve_potential(logr, lambda, nu, s_cand, cand);
      double new_obj = objective(cand, lambda, nu, s_cand);
      if (!std::isfinite(nu)) {
        // The exact-match price moves with the potential; compare at the new price.
        if (it == 1) obj = new_obj;
        else obj = objective(st.w, lambda, nu, s_cand);
      }
      if (new_obj > obj + cfg_.primal_tol) {
        // Rounding at the constraint kink; fall back to a damped step.
        double eta = 0.5;
        for (; eta > 1e-6; eta *= 0.5) {
          blend(st.w, cand, eta, trial);
          new_obj = objective(trial, lambda, nu, s_cand);
          if (new_obj <= obj + cfg_.primal_tol) break;
        }
        if (eta <= 1e-6) break;
        cand.swap(trial);
      }
      double change = 0.0;
      for (std::size_t i = 0; i < cand.size(); ++i) change = std::max(change, std::abs(cand[i] - st.w[i]));
      st.w.swap(cand);
      st.s.swap(s_cand);
      obj = new_obj;
      if (history) history->push_back(obj);
      if (change < cfg_.primal_tol) {
        res.converged = true;
        break;
      }
      if (it % 8 == 0) {
        const double value = std::isfinite(nu) ? obj : objective_exact(st.w, lambda);
        if (value - lagrangian_lower_bound(lambda, st) <= cfg_.primal_tol) {
          res.converged = true;
          break;
        }
      }
    }
    res.objective = obj;
    res.dual_value = dual_value(lambda, st, delta, pi);
    return res;
  }

  /// Lower bound on min_w I + λ·E[D] + Σ_y s_y P_Y(y) − s·P_X, from the
  /// reference law of `st.w` in the convexity bound Φ(r*) ≥ F(r) + 1 − max_y c_y.
  /// Since ν·TV ≥ s·(P_Y − P_X) for s ∈ [0, ν], it also bounds the Lagrangian.
  double lagrangian_lower_bound(double lambda, const InnerState& st) const {
    const std::size_t X = P_.x_size(), Z = P_.z_size(), Y = P_.y_size, A = P_.tv_alphabet();
    double phi = 0.0;  // nats
    std::vector<double> r(Y), c(Y), e(Y);
    for (std::size_t z = 0; z < Z; ++z) {
      if (pz_[z] <= 0.0) continue;
      std::fill(r.begin(), r.end(), 0.0);
      for (std::size_t x = 0; x < X; ++x) {
        const double pxz = P_.p(x, z);
        for (std::size_t y = 0; y < Y; ++y) r[y] += pxz * st.w[(x * Z + z) * Y + y];
      }
      for (auto& v : r) v /= pz_[z];
      std::fill(c.begin(), c.end(), 0.0);
      double F = 0.0;
      for (std::size_t x = 0; x < X; ++x) {
        const double pxgz = P_.p(x, z) / pz_[z];
        if (pxgz <= 0.0) continue;
        // Work relative to the smallest cost to stay in range.
        double cmin = kInf;
        for (std::size_t y = 0; y < Y; ++y) cmin = std::min(cmin, cost(x, y, lambda, st.s));
        double norm = 0.0;
        for (std::size_t y = 0; y < Y; ++y) {
          e[y] = std::exp(-(cost(x, y, lambda, st.s) - cmin));
          norm += r[y] * e[y];
        }
        if (norm <= 0.0) return -kInf;
        F -= pxgz * (std::log(norm) - cmin);
        for (std::size_t y = 0; y < Y; ++y) c[y] += pxgz * e[y] / norm;
      }
      const double cmax = *std::max_element(c.begin(), c.end());
      phi += pz_[z] * (F + 1.0 - cmax);
    }
    double bound = phi / kLn2;
    for (std::size_t a = 0; a < A; ++a) bound -= st.s[a] * px_[a];
    return bound;
  }

  /// Certified lower bound on R^(e)(Δ, Π) from multipliers (λ, s).
  double dual_value(double lambda, const InnerState& st, double delta, double pi) const {
    return lagrangian_lower_bound(lambda, st) - lambda * delta - pi * potential_range(st.s);
  }

 private:
  // Cost of output y for input x, in nats.
  double cost(std::size_t x, std::size_t y, double lambda, std::span<const double> s) const {
    const double dl = P_.d(x, y) == 0.0 ? 0.0 : lambda * P_.d(x, y);
    return kLn2 * (dl + s[y]);
  }

  static double potential_range(std::span<const double> s) {
    if (s.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    return *hi - *lo;
  }

  void mix_with_uniform(std::vector<double>& w, double eps) const {
    const double u = eps / static_cast<double>(P_.y_size);
    for (auto& v : w) v = (1.0 - eps) * v + u;
  }

  void clip_potential(std::vector<double>& s, double nu) const {
    for (auto& v : s) {
      v = std::max(v, 0.0);
      if (std::isfinite(nu)) v = std::min(v, nu);
    }
    if (!std::isfinite(nu)) {
      const double lo = *std::min_element(s.begin(), s.end());
      for (auto& v : s) v -= lo;
    }
  }

  // log r(y|z), the output law of w within each side-information slice.
  void reference_law(std::span<const double> w, std::vector<double>& logr) const {
    const std::size_t X = P_.x_size(), Z = P_.z_size(), Y = P_.y_size;
    std::vector<double> r(Y * Z, 0.0);
    logr.assign(Y * Z, -kInf);
    for (std::size_t x = 0; x < X; ++x)
      for (std::size_t z = 0; z < Z; ++z) {
        const double pxz = P_.p(x, z);
        for (std::size_t y = 0; y < Y; ++y) r[z * Y + y] += pxz * w[(x * Z + z) * Y + y];
      }
    for (std::size_t z = 0; z < Z; ++z) {
      double tot = 0.0;
      for (std::size_t y = 0; y < Y; ++y) tot += r[z * Y + y];
      for (std::size_t y = 0; y < Y; ++y) {
        if (tot <= 0.0) logr[z * Y + y] = -std::log(static_cast<double>(Y));
        else if (r[z * Y + y] > 0.0) logr[z * Y + y] = std::log(r[z * Y + y] / tot);
      }
    }
  }

  // w(y|x,z) ∝ r(y|z) · 2^{−λ d(x,y) − s_y}
  void channel_from(std::span<const double> logr, double lambda, std::span<const double> s,
                    std::vector<double>& out) const {
    const std::size_t X = P_.x_size(), Z = P_.z_size(), Y = P_.y_size;
    std::vector<double> lg(Y);
    for (std::size_t x = 0; x < X; ++x)
      for (std::size_t z = 0; z < Z; ++z) {
        double mx = -kInf;
        for (std::size_t y = 0; y < Y; ++y) {
          lg[y] = logr[z * Y + y] - cost(x, y, lambda, s);
          mx = std::max(mx, lg[y]);
        }
        double* row = &out[(x * Z + z) * Y];
        double tot = 0.0;
        for (std::size_t y = 0; y < Y; ++y) tot += (row[y] = std::exp(lg[y] - mx));
        for (std::size_t y = 0; y < Y; ++y) row[y] /= tot;
      }
  }

  // For fixed r, moves the potential multiplicatively until the induced
  // P_Y matches P_X on every coordinate strictly inside [0, ν] (P_Y ≤ P_X
  // where s = 0, P_Y ≥ P_X where s = ν). Output-only symbols with P_X = 0
  // are pushed to the ceiling.
  void solve_potential(std::span<const double> logr, double lambda, double nu, std::vector<double>& s,
                       std::vector<double>& w) const {
    const std::size_t Y = P_.y_size, A = P_.tv_alphabet();
    if (nu == 0.0) {
      std::fill(s.begin(), s.end(), 0.0);
      channel_from(logr, lambda, s, w);
      return;
    }
    const double ceiling = std::isfinite(nu) ? nu : 1e6;
    for (int k = 0; k < 1000; ++k) {
      channel_from(logr, lambda, s, w);
      const auto py = output_law(P_, w);
      double move = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        const double q = a < Y ? py[a] : 0.0;
        const double p = px_[a];
        double next = s[a];
        if (p <= 0.0 && q <= 0.0) continue;
        if (q <= 0.0) next = 0.0;
        else if (p <= 0.0) next = ceiling;
        else next = s[a] + std::log2(q / p);
        next = std::clamp(next, 0.0, ceiling);
        move = std::max(move, std::abs(next - s[a]));
        s[a] = next;
      }
      if (!std::isfinite(nu)) {
        const double lo = *std::min_element(s.begin(), s.end());
        for (auto& v : s) v -= lo;
      }
      if (move < 1e-14) break;
    }
    channel_from(logr, lambda, s, w);
  }

  // Geometric interpolation of channel rows: w^{1−η} · cand^{η}, renormalized.
  void blend(std::span<const double> w, std::span<const double> cand, double eta, std::vector<double>& out) const {
    const std::size_t Y = P_.y_size, rows = w.size() / Y;
    if (eta >= 1.0) {
      std::copy(cand.begin(), cand.end(), out.begin());
      return;
    }
    for (std::size_t r = 0; r < rows; ++r) {
      double tot = 0.0;
      for (std::size_t y = 0; y < Y; ++y) {
        const double a = w[r * Y + y], b = cand[r * Y + y];
        const double v = (a > 0.0 && b > 0.0) ? std::exp((1.0 - eta) * std::log(a) + eta * std::log(b)) : 0.0;
        out[r * Y + y] = v;
        tot += v;
      }
      if (tot <= 0.0) {
        for (std::size_t y = 0; y < Y; ++y) out[r * Y + y] = cand[r * Y + y];
        continue;
      }
      for (std::size_t y = 0; y < Y; ++y) out[r * Y + y] /= tot;
    }
  }

  const ProblemSpec& P_;
  const SolverConfig& cfg_;
  std::vector<double> px_;
  std::vector<double> pz_;
};

struct Candidate {
  std::vector<double> w;
  double lambda = 0.0, nu = 0.0;
  ChannelMetrics m;
};

inline Candidate blend_linear(const Candidate& a, const Candidate& b, double weight_b) {
  Candidate c = a;
  for (std::size_t i = 0; i < c.w.size(); ++i) c.w[i] = (1.0 - weight_b) * a.w[i] + weight_b * b.w[i];
  c.lambda = (1.0 - weight_b) * a.lambda + weight_b * b.lambda;
  c.nu = (std::isfinite(a.nu) && std::isfinite(b.nu)) ? (1.0 - weight_b) * a.nu + weight_b * b.nu
                                                       : std::max(a.nu, b.nu);
  return c;
}

// Mixing the minimizers at the ends of a multiplier bracket [a, b] loses at
// most (b − a)·(constraint gap) in rate; bisection stops once that is below
// this fraction of dual_tol.
inline constexpr double kBracketTol = 1e-3;
// Rounding slack when a linear mix is aimed exactly at a constraint level.
inline constexpr double kRoundTol = 1e-12;

/// Locates (λ, ν) for one (Δ, Π) instance and assembles the solution.
class RdpEngine {
 public:
  RdpEngine(const ProblemSpec& P, const SolverConfig& cfg, double delta, double pi)
      : P_(P), cfg_(cfg), delta_(delta), pi_(pi), lag_(P, cfg), state_(lag_.initial_state()) {}

  RDPSolution run() {
    auto b0 = lambda_phase(0.0);
    if (!b0) return finish(best_effort_, SolveStatus::infeasible);
    Candidate c0 = *b0;
    if (c0.m.tv <= pi_ + 0.5 * cfg_.constraint_tol) return finish(c0, SolveStatus::converged);

    if (pi_ <= 0.0) {
      auto binf = lambda_phase(kInf);
      if (!binf || binf->m.tv > cfg_.constraint_tol) return finish(binf ? *binf : c0, SolveStatus::infeasible);
      return finish(*binf, SolveStatus::converged);
    }

    // Bracket ν: lo violates the perception constraint, hi satisfies it.
    Candidate lo = c0;
    std::optional<Candidate> hi;
    double nu_lo = 0.0, nu_hi = cfg_.step_init;
    while (!hi) {
      if (nu_hi > cfg_.multiplier_upper_bound) {
        auto binf = lambda_phase(kInf);
        if (binf && binf->m.tv <= pi_ + 0.5 * cfg_.constraint_tol) {
          hi = *binf;
          nu_hi = kInf;
          break;
        }
        return finish(binf ? *binf : lo, SolveStatus::infeasible);
      }
      auto b = lambda_phase(nu_hi);
      if (b && b->m.tv <= pi_) {
        hi = *b;
        break;
      }
      if (b) lo = *b;
      nu_lo = nu_hi;
      nu_hi *= cfg_.step_growth;
    }
    if (std::isfinite(nu_hi)) {
      for (int it = 0; it < cfg_.max_outer_iters; ++it) {
        if ((nu_hi - nu_lo) * (lo.m.tv - hi->m.tv) <= kBracketTol * cfg_.dual_tol) break;
        const double mid = 0.5 * (nu_lo + nu_hi);
        auto b = lambda_phase(mid);
        if (!b) break;
        if (b->m.tv <= pi_) {
          hi = *b;
          nu_hi = mid;
        } else {
          lo = *b;
          nu_lo = mid;
        }
      }
    }
    return finish(mix_to_perception(lo, *hi), SolveStatus::converged);
  }

  /// Lagrangian minimization at fixed multipliers, with its objective history.
  Candidate lagrangian(double lambda, double nu, std::vector<double>* history, InnerResult* info) {
    return inner(lambda, nu, history, info);
  }

 private:
  Candidate inner(double lambda, double nu, std::vector<double>* history = nullptr, InnerResult* info = nullptr) {
    const auto r = lag_.solve(lambda, nu, delta_, pi_, state_, history);
    iterations_ += r.iterations;
    all_inner_converged_ = all_inner_converged_ && r.converged;
    if (std::isfinite(r.dual_value)) dual_best_ = std::max(dual_best_, r.dual_value);
    if (info) *info = r;
    Candidate c{state_.w, lambda, nu, lag_.measure(state_.w)};
    return c;
  }

  // At fixed ν, finds the distortion multiplier; returns a channel meeting
  // E[D] ≤ Δ (mixing the two bracketing minimizers), or nothing if the
  // distortion target is unreachable.
  std::optional<Candidate> lambda_phase(double nu) {
    Candidate c0 = inner(0.0, nu);
    best_effort_ = c0;
    if (c0.m.distortion <= delta_) return c0;
    Candidate lo = c0;
    std::optional<Candidate> hi;
    double lam_lo = 0.0, lam_hi = cfg_.step_init;
    while (true) {
      Candidate c = inner(lam_hi, nu);
      best_effort_ = c;
      if (c.m.distortion <= delta_) {
        hi = c;
        break;
      }
      lo = c;
      lam_lo = lam_hi;
      lam_hi *= cfg_.step_growth;
      if (lam_hi > cfg_.multiplier_upper_bound) {
        if (c.m.distortion <= delta_ + 0.5 * cfg_.constraint_tol) return c;
        return std::nullopt;
      }
    }
    for (int it = 0; it < cfg_.max_outer_iters; ++it) {
      if ((lam_hi - lam_lo) * (lo.m.distortion - hi->m.distortion) <= kBracketTol * cfg_.dual_tol) break;
      const double mid = 0.5 * (lam_lo + lam_hi);
      Candidate c = inner(mid, nu);
      if (c.m.distortion <= delta_) {
        hi = c;
        lam_hi = mid;
      } else {
        lo = c;
        lam_lo = mid;
      }
    }
    // E[D] is linear in the channel: mix so that it lands exactly on Δ.
    const double span = lo.m.distortion - hi->m.distortion;
    const double wlo = span > 0.0 ? std::clamp((delta_ - hi->m.distortion) / span, 0.0, 1.0) : 0.0;
    Candidate c = blend_linear(*hi, lo, wlo);
    c.m = lag_.measure(c.w);
    if (c.m.distortion > delta_ + kRoundTol) c = *hi;
    return c;
  }

  // TV is convex along the segment from hi (feasible) to lo (infeasible):
  // take the largest step toward lo that keeps TV ≤ Π.
  Candidate mix_to_perception(const Candidate& lo, const Candidate& hi) {
    double a = 0.0, b = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (a + b);
      Candidate c = blend_linear(hi, lo, mid);
      if (lag_.measure(c.w).tv <= pi_ + kRoundTol) a = mid;
      else b = mid;
    }
    Candidate c = blend_linear(hi, lo, a);
    c.m = lag_.measure(c.w);
    return c;
  }

  RDPSolution finish(const Candidate& c, SolveStatus status) {
    RDPSolution sol;
    sol.channel = Channel({P_.x_size(), P_.z_size()}, P_.y_size, c.w, 1e-9);
    sol.rate = c.m.rate;
    sol.operational_rate = c.m.rate + cfg_.constraint_tol;
    sol.achieved_distortion = c.m.distortion;
    sol.achieved_perception_tv = c.m.tv;
    sol.lambda_distortion = c.lambda;
    sol.nu_perception = c.nu;
    sol.dual_bound = std::isfinite(dual_best_) ? std::min(dual_best_, c.m.rate) : 0.0;
    sol.dual_bound = std::max(sol.dual_bound, 0.0);
    sol.iterations = iterations_;
    if (status == SolveStatus::infeasible) {
      sol.status = status;
      sol.converged = false;
    } else {
      sol.converged = c.m.rate - dual_best_ <= cfg_.dual_tol || c.m.rate <= cfg_.dual_tol;
      sol.status = sol.converged ? SolveStatus::converged : SolveStatus::not_converged;
      // Objective history of the final Lagrangian, replayed from a cold start.
      InnerState fresh = lag_.initial_state();
      lag_.solve(c.lambda, c.nu, delta_, pi_, fresh, &sol.objective_history);
    }
    return sol;
  }

  const ProblemSpec& P_;
  const SolverConfig& cfg_;
  double delta_, pi_;
  LagrangianSolver lag_;
  InnerState state_;
  Candidate best_effort_;
  int iterations_ = 0;
  bool all_inner_converged_ = true;
  double dual_best_ = -kInf;
};

inline void check_targets(double delta, double pi) {
  require(std::isfinite(delta) && delta >= 0.0, "distortion target must be finite and >= 0");
  require(std::isfinite(pi) && pi >= 0.0 && pi <= 1.0, "perception target must lie in [0, 1]");
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// R^(e)(Δ, Π): minimum I(X;Y|Z) over channels with E[D] ≤ Δ and
/// d_TV(P_X, P_Y) ≤ Π.
inline RDPSolution solve_empirical_rdp(const ProblemSpec& spec, double delta, double pi,
                                       const SolverConfig& cfg = {}) {
  cfg.validate();
  detail::check_targets(delta, pi);
  detail::RdpEngine engine(spec, cfg, delta, pi);
  return engine.run();
}

/// R(Δ): the conditional rate-distortion function (no perception constraint).
inline RDPSolution solve_conditional_rd(const ProblemSpec& spec, double delta, const SolverConfig& cfg = {}) {
  return solve_empirical_rdp(spec, delta, 1.0, cfg);
}

/// Minimum I(X;Y|Z) subject to E[D] ≤ Δ and P_Y = P_X.
inline RDPSolution solve_perfect_realism(const ProblemSpec& spec, double delta, const SolverConfig& cfg = {}) {
  detail::require(spec.y_size == spec.x_size(),
                  "solve_perfect_realism: reconstruction and source alphabets must coincide");
  return solve_empirical_rdp(spec, delta, 0.0, cfg);
}

/// Upper bound on the strong-perception RDP function with unlimited common
/// randomness. The limsup of product TV is 0 or 1, so any Π < 1 forces
/// P_Y = P_X. Infeasible instances return +inf.
inline double strong_rdp_bound(const ProblemSpec& spec, double delta, double pi, const SolverConfig& cfg = {}) {
  detail::check_targets(delta, pi);
  const auto sol = pi >= 1.0 - cfg.constraint_tol ? solve_conditional_rd(spec, delta, cfg)
                                                  : solve_perfect_realism(spec, delta, cfg);
  if (sol.status == SolveStatus::infeasible) return std::numeric_limits<double>::infinity();
  return sol.rate;
}

/// g(R, Δ) ∈ {0, 1}: 0 iff a channel with I ≤ R, E[D] ≤ Δ and P_Y = P_X exists.
inline int g_function(const ProblemSpec& spec, double rate, double delta, const SolverConfig& cfg = {}) {
  detail::require(rate >= 0.0, "g_function: rate must be >= 0");
  if (spec.y_size != spec.x_size()) {
    // Marginals on different alphabets can still coincide if Y's extra
    // symbols are unused; solve with the exact-match constraint directly.
    const auto sol = solve_empirical_rdp(spec, delta, 0.0, cfg);
    return sol.status != SolveStatus::infeasible && sol.rate <= rate + cfg.constraint_tol ? 0 : 1;
  }
  const auto sol = solve_perfect_realism(spec, delta, cfg);
  return sol.status != SolveStatus::infeasible && sol.rate <= rate + cfg.constraint_tol ? 0 : 1;
}

/// f(Δ) = g(R(Δ), Δ).
inline int f_function(const ProblemSpec& spec, double delta, const SolverConfig& cfg = {}) {
  const auto rd = solve_conditional_rd(spec, delta, cfg);
  return g_function(spec, rd.rate, delta, cfg);
}

struct CurveRow {
  double delta = 0.0, pi = 0.0, rate = 0.0;
  double achieved_distortion = 0.0, achieved_tv = 0.0;
  bool converged = false;
  SolveStatus status = SolveStatus::not_converged;
};

/// Worker count for grid sweeps: RDP_THREADS if set, else the hardware count.
inline unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RDP_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

namespace detail {

/// Runs work(begin, stride) on worker_count(jobs) threads; job k goes to worker k mod stride.
template <class F>
void parallel_strided(std::size_t jobs, F&& work) {
  const unsigned nt = worker_count(jobs);
  if (nt <= 1) {
    work(std::size_t{0}, std::size_t{1});
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < nt; ++t) pool.emplace_back([&work, t, nt] { work(std::size_t{t}, std::size_t{nt}); });
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// R^(e) on the grid Δ_list × Π_list, rows sorted by (Δ, Π). Every cell is
/// solved from a cold start, so the table does not depend on the thread count.
inline std::vector<CurveRow> sweep_curve(const ProblemSpec& spec, std::vector<double> deltas,
                                         std::vector<double> pis, const SolverConfig& cfg = {}) {
  detail::require(!deltas.empty() && !pis.empty(), "sweep_curve: empty grid");
  std::sort(deltas.begin(), deltas.end());
  std::sort(pis.begin(), pis.end());
  for (double d : deltas)
    for (double p : pis) detail::check_targets(d, p);
  cfg.validate();
  std::vector<CurveRow> rows(deltas.size() * pis.size());
  for (std::size_t i = 0; i < deltas.size(); ++i)
    for (std::size_t k = 0; k < pis.size(); ++k) {
      rows[i * pis.size() + k].delta = deltas[i];
      rows[i * pis.size() + k].pi = pis[k];
    }
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t c = begin; c < rows.size(); c += stride) {
      auto& row = rows[c];
      const auto sol = solve_empirical_rdp(spec, row.delta, row.pi, cfg);
      row.rate = sol.rate;
      row.achieved_distortion = sol.achieved_distortion;
      row.achieved_tv = sol.achieved_perception_tv;
      row.converged = sol.converged;
      row.status = sol.status;
    }
  };
  detail::parallel_strided(rows.size(), work);
  return rows;
}

struct LagrangianResult {
  Channel channel;
  double objective = 0.0;  ///< I + λ·E[D] + ν·TV at the returned channel
  double rate = 0.0, distortion = 0.0, perception_tv = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective_history;
};

/// Approximately minimizes I(X;Y|Z) + λ·E[D] + ν·d_TV(P_X, P_Y).
inline LagrangianResult lagrangian_inner_solve(const ProblemSpec& spec, double lambda, double nu,
                                               const SolverConfig& cfg = {}) {
  cfg.validate();
  detail::require(lambda >= 0.0 && nu >= 0.0, "lagrangian_inner_solve: multipliers must be >= 0");
  detail::LagrangianSolver lag(spec, cfg);
  auto st = lag.initial_state();
  LagrangianResult out;
  const auto r = lag.solve(lambda, nu, 0.0, 1.0, st, &out.objective_history);
  const auto m = lag.measure(st.w);
  out.channel = Channel({spec.x_size(), spec.z_size()}, spec.y_size, st.w, 1e-9);
  out.rate = m.rate;
  out.distortion = m.distortion;
  out.perception_tv = m.tv;
  out.objective = m.rate + lambda * m.distortion + (std::isfinite(nu) ? nu * m.tv : 0.0);
  out.converged = r.converged;
  out.iterations = r.iterations;
  return out;
}

/// Rate, distortion and perception of an arbitrary channel P_{Y|XZ}.
struct ChannelEvaluation {
  double rate = 0.0, distortion = 0.0, perception_tv = 0.0;
};

inline ChannelEvaluation evaluate_channel(const ProblemSpec& spec, const Channel& ch) {
  detail::require(ch.in_dims() == std::vector<std::size_t>{spec.x_size(), spec.z_size()} &&
                      ch.out_dim() == spec.y_size,
                  "evaluate_channel: channel shape does not match the problem");
  std::vector<double> px(spec.tv_alphabet(), 0.0);
  const auto pxv = spec.p_x();
  for (std::size_t x = 0; x < spec.x_size(); ++x) px[x] = pxv[x];
  const auto pz = spec.p_z();
  std::vector<double> w(ch.flat().begin(), ch.flat().end());
  for (std::size_t r = 0; r < ch.rows(); ++r)
    if (!ch.defined(r)) {
      detail::require(spec.p_xz[r] == 0.0, "evaluate_channel: undefined row on a positive-mass input");
      for (std::size_t y = 0; y < spec.y_size; ++y) w[r * spec.y_size + y] = 1.0 / static_cast<double>(spec.y_size);
    }
  const auto m = detail::measure(spec, w, px, pz.masses());
  return {m.rate, m.distortion, m.tv};
}

}  // namespace rdp

#endif  // RDP_SOLVER_HPP
