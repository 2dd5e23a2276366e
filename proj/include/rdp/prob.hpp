#ifndef RDP_PROB_HPP
#define RDP_PROB_HPP

// Exact finite-alphabet probability calculus: distributions, joint tables,
// channels, empirical types, total variation and information measures.
// Every type is immutable after construction and validated on the way in.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rdp/errors.hpp"

namespace rdp {

/// Tolerance for "masses sum to one" and "entries are nonnegative".
inline constexpr double kProbTol = 1e-12;

namespace detail {

inline void check_masses(std::span<const double> p, double tol, const char* what) {
  double total = 0.0;
  for (double v : p) {
    require(std::isfinite(v), std::string(what) + ": non-finite mass");
    require(v >= -tol, std::string(what) + ": negative mass");
    total += v;
  }
  require(std::abs(total - 1.0) <= tol,
          std::string(what) + ": masses sum to " + std::to_string(total) + ", not 1");
}

inline std::size_t product(std::span<const std::size_t> dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

inline std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= b;
  return r;
}

// x·log2(x/y) with the 0·log 0 = 0 convention.
inline double xlog2_ratio(double x, double y) {
  if (x <= 0.0) return 0.0;
  return x * std::log2(x / y);
}

}  // namespace detail

// ---------------------------------------------------------------------------

class ProbVec {
 public:
  ProbVec() = default;

  explicit ProbVec(std::vector<double> p, double tol = kProbTol) : p_(std::move(p)) {
    detail::require(!p_.empty(), "ProbVec: empty alphabet");
    detail::check_masses(p_, tol, "ProbVec");
    for (auto& v : p_) v = std::max(v, 0.0);
  }

  static ProbVec uniform(std::size_t k) {
    detail::require(k > 0, "ProbVec::uniform: empty alphabet");
    return ProbVec(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  static ProbVec point_mass(std::size_t k, std::size_t a) {
    detail::require(a < k, "ProbVec::point_mass: symbol out of range");
    std::vector<double> p(k, 0.0);
    p[a] = 1.0;
    return ProbVec(std::move(p));
  }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t a) const { return p_[a]; }
  std::span<const double> masses() const { return p_; }
  const std::vector<double>& values() const { return p_; }

  friend bool operator==(const ProbVec&, const ProbVec&) = default;

 private:
  std::vector<double> p_;
};

// ---------------------------------------------------------------------------

/// A joint law over a product of finite alphabets, stored row-major (the
/// last axis varies fastest).
class JointTable {
 public:
  JointTable() = default;

  JointTable(std::vector<std::size_t> dims, std::vector<double> p, double tol = kProbTol)
      : dims_(std::move(dims)), p_(std::move(p)) {
    detail::require(!dims_.empty(), "JointTable: no axes");
    for (auto d : dims_) detail::require(d > 0, "JointTable: empty axis");
    detail::require(detail::product(dims_) == p_.size(), "JointTable: size does not match dims");
    detail::check_masses(p_, tol, "JointTable");
    for (auto& v : p_) v = std::max(v, 0.0);
  }

  explicit JointTable(const ProbVec& p) : dims_{p.size()}, p_(p.values()) {}

  std::size_t rank() const { return dims_.size(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const { return p_.size(); }
  std::span<const double> flat() const { return p_; }
  double operator[](std::size_t flat_index) const { return p_[flat_index]; }

  std::size_t flat_index(std::span<const std::size_t> idx) const {
    detail::require(idx.size() == dims_.size(), "JointTable: index rank mismatch");
    std::size_t f = 0;
    for (std::size_t a = 0; a < dims_.size(); ++a) {
      detail::require(idx[a] < dims_[a], "JointTable: index out of range");
      f = f * dims_[a] + idx[a];
    }
    return f;
  }

  double at(std::initializer_list<std::size_t> idx) const {
    std::vector<std::size_t> v(idx);
    return p_[flat_index(v)];
  }

  /// Decomposes a flat index into per-axis coordinates.
  std::vector<std::size_t> unflatten(std::size_t f) const {
    std::vector<std::size_t> idx(dims_.size());
    for (std::size_t a = dims_.size(); a-- > 0;) {
      idx[a] = f % dims_[a];
      f /= dims_[a];
    }
    return idx;
  }

  ProbVec as_prob_vec() const {
    detail::require(rank() == 1, "JointTable::as_prob_vec: table has more than one axis");
    return ProbVec(p_);
  }

  friend bool operator==(const JointTable&, const JointTable&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> p_;
};

// ---------------------------------------------------------------------------

/// A stochastic map from a tuple of conditioning symbols to one output symbol.
/// Rows produced by conditioning on zero-mass events are flagged undefined
/// and must not be read.
class Channel {
 public:
  Channel() = default;

  Channel(std::vector<std::size_t> in_dims, std::size_t out_dim, std::vector<double> p,
          double tol = kProbTol)
      : Channel(std::move(in_dims), out_dim, std::move(p), {}, tol) {}

  Channel(std::vector<std::size_t> in_dims, std::size_t out_dim, std::vector<double> p,
          std::vector<bool> defined, double tol = kProbTol)
      : in_dims_(std::move(in_dims)), out_dim_(out_dim), p_(std::move(p)),
        defined_(std::move(defined)) {
    detail::require(out_dim_ > 0, "Channel: empty output alphabet");
    for (auto d : in_dims_) detail::require(d > 0, "Channel: empty input axis");
    const std::size_t rows = detail::product(in_dims_);
    detail::require(rows * out_dim_ == p_.size(), "Channel: size does not match dims");
    if (defined_.empty()) defined_.assign(rows, true);
    detail::require(defined_.size() == rows, "Channel: defined-mask size mismatch");
    for (std::size_t r = 0; r < rows; ++r) {
      if (!defined_[r]) continue;
      detail::check_masses(std::span<const double>(p_).subspan(r * out_dim_, out_dim_), tol,
                           "Channel row");
    }
    for (auto& v : p_) v = std::max(v, 0.0);
  }

  static Channel identity(std::size_t k) {
    std::vector<double> p(k * k, 0.0);
    for (std::size_t a = 0; a < k; ++a) p[a * k + a] = 1.0;
    return Channel({k}, k, std::move(p));
  }

  /// Every row equal to `row` (the output ignores the input).
  static Channel constant(std::vector<std::size_t> in_dims, const ProbVec& row) {
    const std::size_t rows = detail::product(in_dims);
    std::vector<double> p;
    p.reserve(rows * row.size());
    for (std::size_t r = 0; r < rows; ++r) p.insert(p.end(), row.values().begin(), row.values().end());
    return Channel(std::move(in_dims), row.size(), std::move(p));
  }

  const std::vector<std::size_t>& in_dims() const { return in_dims_; }
  std::size_t out_dim() const { return out_dim_; }
  std::size_t rows() const { return defined_.size(); }
  bool defined(std::size_t r) const { return defined_[r]; }
  bool all_defined() const { return std::all_of(defined_.begin(), defined_.end(), [](bool b) { return b; }); }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(p_).subspan(r * out_dim_, out_dim_);
  }
  double operator()(std::size_t r, std::size_t y) const { return p_[r * out_dim_ + y]; }
  std::span<const double> flat() const { return p_; }

  std::size_t row_index(std::span<const std::size_t> cond) const {
    detail::require(cond.size() == in_dims_.size(), "Channel: conditioning rank mismatch");
    std::size_t r = 0;
    for (std::size_t a = 0; a < in_dims_.size(); ++a) {
      detail::require(cond[a] < in_dims_[a], "Channel: conditioning symbol out of range");
      r = r * in_dims_[a] + cond[a];
    }
    return r;
  }

  friend bool operator==(const Channel&, const Channel&) = default;

 private:
  std::vector<std::size_t> in_dims_;
  std::size_t out_dim_ = 0;
  std::vector<double> p_;
  std::vector<bool> defined_;
};

// ---------------------------------------------------------------------------

class DistortionMatrix {
 public:
  DistortionMatrix() = default;

  /// `d_max` defaults to the largest entry; when given it must bound every entry.
  DistortionMatrix(std::size_t rows, std::size_t cols, std::vector<double> d, double d_max = -1.0)
      : rows_(rows), cols_(cols), d_(std::move(d)) {
    detail::require(rows_ > 0 && cols_ > 0, "DistortionMatrix: empty alphabet");
    detail::require(d_.size() == rows_ * cols_, "DistortionMatrix: size does not match shape");
    double m = 0.0;
    for (double v : d_) {
      detail::require(std::isfinite(v) && v >= 0.0, "DistortionMatrix: entries must be finite and >= 0");
      m = std::max(m, v);
    }
    if (d_max < 0.0) d_max = m;
    detail::require(std::isfinite(d_max) && d_max >= m, "DistortionMatrix: d_max below an entry");
    d_max_ = d_max;
  }

  static DistortionMatrix hamming(std::size_t rows, std::size_t cols) {
    std::vector<double> d(rows * cols);
    for (std::size_t x = 0; x < rows; ++x)
      for (std::size_t y = 0; y < cols; ++y) d[x * cols + y] = x == y ? 0.0 : 1.0;
    return DistortionMatrix(rows, cols, std::move(d), 1.0);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double d_max() const { return d_max_; }
  double operator()(std::size_t x, std::size_t y) const { return d_[x * cols_ + y]; }
  std::span<const double> flat() const { return d_; }

  friend bool operator==(const DistortionMatrix&, const DistortionMatrix&) = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> d_;
  double d_max_ = 0.0;
};

// ---------------------------------------------------------------------------

/// Counts of a sequence (or of paired sequences), normalized by its length.
struct EmpiricalDist {
  std::vector<std::size_t> dims;
  std::vector<std::size_t> counts;
  std::size_t n = 0;

  double mass(std::size_t flat_index) const {
    return static_cast<double>(counts[flat_index]) / static_cast<double>(n);
  }

  JointTable table() const {
    std::vector<double> p(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) p[i] = mass(i);
    return JointTable(dims, std::move(p));
  }

  ProbVec prob_vec() const { return table().as_prob_vec(); }
};

inline EmpiricalDist empirical(std::span<const std::size_t> seq, std::size_t alphabet_size) {
  detail::require(!seq.empty(), "empirical: empty sequence");
  EmpiricalDist e{{alphabet_size}, std::vector<std::size_t>(alphabet_size, 0), seq.size()};
  for (auto a : seq) {
    detail::require(a < alphabet_size, "empirical: symbol out of range");
    ++e.counts[a];
  }
  return e;
}

inline EmpiricalDist empirical(std::span<const std::size_t> first, std::span<const std::size_t> second,
                               std::size_t first_size, std::size_t second_size) {
  detail::require(!first.empty(), "empirical: empty sequence");
  detail::require(first.size() == second.size(), "empirical: paired sequences differ in length");
  EmpiricalDist e{{first_size, second_size}, std::vector<std::size_t>(first_size * second_size, 0),
                  first.size()};
  for (std::size_t i = 0; i < first.size(); ++i) {
    detail::require(first[i] < first_size && second[i] < second_size, "empirical: symbol out of range");
    ++e.counts[first[i] * second_size + second[i]];
  }
  return e;
}

/// Total variation between two empirical distributions of equal-length
/// sequences, computed in integer arithmetic: (1/2n) Σ |count_a − count_b|.
inline double empirical_tv(std::span<const std::size_t> a_counts, std::span<const std::size_t> b_counts,
                           std::size_t n) {
  detail::require(a_counts.size() == b_counts.size(), "empirical_tv: alphabet mismatch");
  std::size_t l1 = 0;
  for (std::size_t i = 0; i < a_counts.size(); ++i)
    l1 += a_counts[i] > b_counts[i] ? a_counts[i] - b_counts[i] : b_counts[i] - a_counts[i];
  return static_cast<double>(l1) / (2.0 * static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Total variation

inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  detail::require(p.size() == q.size(), "tv_distance: alphabet sizes differ");
  double l1 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) l1 += std::abs(p[i] - q[i]);
  return std::min(1.0, 0.5 * l1);
}

inline double tv_distance(const ProbVec& p, const ProbVec& q) { return tv_distance(p.masses(), q.masses()); }

inline double tv_distance(const JointTable& p, const JointTable& q) {
  detail::require(p.dims() == q.dims(), "tv_distance: table shapes differ");
  return tv_distance(p.flat(), q.flat());
}

/// TV between laws on alphabets identified by position; the shorter one is
/// padded with zero mass.
inline double tv_distance_padded(std::span<const double> p, std::span<const double> q) {
  const std::size_t k = std::max(p.size(), q.size());
  double l1 = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    l1 += std::abs(a - b);
  }
  return std::min(1.0, 0.5 * l1);
}

// ---------------------------------------------------------------------------
// Marginals, composition, conditioning

/// Keeps `keep` axes, in the given order, summing out the rest.
inline JointTable marginalize(const JointTable& j, std::span<const std::size_t> keep) {
  detail::require(!keep.empty(), "marginalize: no axes kept");
  std::vector<std::size_t> out_dims;
  for (auto a : keep) {
    detail::require(a < j.rank(), "marginalize: axis out of range");
    out_dims.push_back(j.dim(a));
  }
  {
    std::vector<std::size_t> sorted(keep.begin(), keep.end());
    std::sort(sorted.begin(), sorted.end());
    detail::require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                    "marginalize: repeated axis");
  }
  std::vector<double> out(detail::product(out_dims), 0.0);
  std::vector<std::size_t> idx(j.rank(), 0);
  for (std::size_t f = 0; f < j.size(); ++f) {
    std::size_t g = 0;
    for (std::size_t k = 0; k < keep.size(); ++k) g = g * out_dims[k] + idx[keep[k]];
    out[g] += j[f];
    for (std::size_t a = j.rank(); a-- > 0;) {
      if (++idx[a] < j.dim(a)) break;
      idx[a] = 0;
    }
  }
  return JointTable(std::move(out_dims), std::move(out), 1e-9);
}

inline JointTable marginalize(const JointTable& j, std::initializer_list<std::size_t> keep) {
  std::vector<std::size_t> k(keep);
  return marginalize(j, std::span<const std::size_t>(k));
}

inline ProbVec marginal(const JointTable& j, std::size_t axis) {
  return marginalize(j, {axis}).as_prob_vec();
}

/// prior(a) · ch(b | a): appends the channel output as a new last axis.
inline JointTable compose(const JointTable& prior, const Channel& ch) {
  detail::require(prior.dims() == ch.in_dims(), "compose: channel inputs do not match prior shape");
  std::vector<std::size_t> dims = prior.dims();
  dims.push_back(ch.out_dim());
  std::vector<double> out(prior.size() * ch.out_dim(), 0.0);
  for (std::size_t r = 0; r < prior.size(); ++r) {
    if (prior[r] == 0.0) continue;
    detail::require(ch.defined(r), "compose: channel row undefined on a positive-mass input");
    for (std::size_t y = 0; y < ch.out_dim(); ++y) out[r * ch.out_dim() + y] = prior[r] * ch(r, y);
  }
  return JointTable(std::move(dims), std::move(out), 1e-9);
}

inline JointTable compose(const ProbVec& prior, const Channel& ch) { return compose(JointTable(prior), ch); }

/// Channel from every other axis (in order) to `out_axis`. Rows whose
/// conditioning event has zero mass are flagged undefined.
inline Channel condition(const JointTable& j, std::size_t out_axis) {
  detail::require(j.rank() >= 2, "condition: need at least two axes");
  detail::require(out_axis < j.rank(), "condition: axis out of range");
  std::vector<std::size_t> in_axes;
  for (std::size_t a = 0; a < j.rank(); ++a)
    if (a != out_axis) in_axes.push_back(a);
  std::vector<std::size_t> in_dims;
  for (auto a : in_axes) in_dims.push_back(j.dim(a));
  const std::size_t k = j.dim(out_axis);
  const std::size_t rows = detail::product(in_dims);
  std::vector<double> p(rows * k, 0.0);
  for (std::size_t f = 0; f < j.size(); ++f) {
    const auto idx = j.unflatten(f);
    std::size_t r = 0;
    for (std::size_t t = 0; t < in_axes.size(); ++t) r = r * in_dims[t] + idx[in_axes[t]];
    p[r * k + idx[out_axis]] += j[f];
  }
  std::vector<bool> defined(rows, true);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t y = 0; y < k; ++y) s += p[r * k + y];
    if (s <= 0.0) {
      defined[r] = false;
      std::fill_n(p.begin() + static_cast<std::ptrdiff_t>(r * k), k, 0.0);
      continue;
    }
    for (std::size_t y = 0; y < k; ++y) p[r * k + y] /= s;
  }
  return Channel(std::move(in_dims), k, std::move(p), std::move(defined), 1e-9);
}

/// Product of independent laws, first factor on the slowest axis.
inline JointTable product_law(const ProbVec& a, const ProbVec& b) {
  std::vector<double> p(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k) p[i * b.size() + k] = a[i] * b[k];
  return JointTable({a.size(), b.size()}, std::move(p), 1e-9);
}

// ---------------------------------------------------------------------------
// Distortion and information measures (bits)

inline double expected_distortion(const JointTable& xy, const DistortionMatrix& d) {
  detail::require(xy.rank() == 2 && xy.dim(0) == d.rows() && xy.dim(1) == d.cols(),
                  "expected_distortion: shape mismatch");
  double e = 0.0;
  for (std::size_t f = 0; f < xy.size(); ++f) e += xy[f] * d.flat()[f];
  return std::clamp(e, 0.0, d.d_max());
}

inline double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return std::max(h, 0.0);
}

inline double entropy(const ProbVec& p) { return entropy(p.masses()); }
inline double entropy(const JointTable& j) { return entropy(j.flat()); }

/// I(A;B|C) for disjoint axis groups of `j` (C may be empty).
inline double conditional_mutual_information(const JointTable& j, std::span<const std::size_t> a,
                                             std::span<const std::size_t> b,
                                             std::span<const std::size_t> c) {
  detail::require(!a.empty() && !b.empty(), "conditional_mutual_information: empty axis group");
  std::vector<std::size_t> abc, ac, bc;
  abc.insert(abc.end(), a.begin(), a.end());
  abc.insert(abc.end(), b.begin(), b.end());
  abc.insert(abc.end(), c.begin(), c.end());
  ac.insert(ac.end(), a.begin(), a.end());
  ac.insert(ac.end(), c.begin(), c.end());
  bc.insert(bc.end(), b.begin(), b.end());
  bc.insert(bc.end(), c.begin(), c.end());
  const JointTable pabc = marginalize(j, abc);
  const JointTable pac = marginalize(j, ac);
  const JointTable pbc = marginalize(j, bc);
  const std::size_t na = detail::product(std::span<const std::size_t>(pabc.dims()).first(a.size()));
  const std::size_t nb =
      detail::product(std::span<const std::size_t>(pabc.dims()).subspan(a.size(), b.size()));
  const std::size_t nc = pabc.size() / (na * nb);
  std::vector<double> pc(nc, 0.0);
  for (std::size_t f = 0; f < pabc.size(); ++f) pc[f % nc] += pabc[f];
  double info = 0.0;
  for (std::size_t ia = 0; ia < na; ++ia)
    for (std::size_t ib = 0; ib < nb; ++ib)
      for (std::size_t ic = 0; ic < nc; ++ic) {
        const double v = pabc[(ia * nb + ib) * nc + ic];
        if (v <= 0.0) continue;
        info += detail::xlog2_ratio(v, pac[ia * nc + ic] * pbc[ib * nc + ic] / pc[ic]);
      }
  return std::max(info, 0.0);
}

inline double mutual_information(const JointTable& j) {
  detail::require(j.rank() == 2, "mutual_information: need a two-axis table");
  const std::size_t a[] = {0}, b[] = {1};
  return conditional_mutual_information(j, a, b, {});
}

/// I(A;B|C) on a three-axis table where `cond_axis` is C and the other two
/// axes are A and B.
inline double conditional_mutual_information(const JointTable& j, std::size_t cond_axis) {
  detail::require(j.rank() == 3, "conditional_mutual_information: need a three-axis table");
  detail::require(cond_axis < 3, "conditional_mutual_information: axis out of range");
  std::vector<std::size_t> rest;
  for (std::size_t a = 0; a < 3; ++a)
    if (a != cond_axis) rest.push_back(a);
  const std::size_t a[] = {rest[0]}, b[] = {rest[1]}, c[] = {cond_axis};
  return conditional_mutual_information(j, a, b, c);
}

}  // namespace rdp

#endif  // RDP_PROB_HPP
