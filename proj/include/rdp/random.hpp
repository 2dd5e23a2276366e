#ifndef RDP_RANDOM_HPP
#define RDP_RANDOM_HPP

// Counter-based randomness. Every random draw in the library is a pure
// function of a key and a tuple of counters, hashed with the splitmix64
// finalizer, so results do not depend on evaluation order or thread count.
//
//   mix(k)            = splitmix64 finalizer of k + 0x9e3779b97f4a7c15
//   prf(key, a, b, …) = mix(… mix(mix(key) ^ a) ^ b …)
//   unit(h)           = (h >> 11) · 2^-53            ∈ [0, 1)

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace rdp {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t prf(std::uint64_t key, std::initializer_list<std::uint64_t> counters) {
  std::uint64_t h = mix64(key);
  for (auto c : counters) h = mix64(h ^ c);
  return h;
}

inline double unit_from(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

/// Digest of a symbol sequence: mix(length), then mix(h ^ (symbol + 1)) per symbol.
inline std::uint64_t sequence_digest(std::span<const std::size_t> seq) {
  std::uint64_t h = mix64(seq.size());
  for (auto s : seq) h = mix64(h ^ (static_cast<std::uint64_t>(s) + 1));
  return h;
}

/// Smallest symbol whose cumulative mass exceeds u, skipping zero-mass
/// symbols (so a draw never lands on an impossible outcome).
inline std::size_t inverse_cdf(std::span<const double> p, double u) {
  double c = 0.0;
  std::size_t last = 0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] <= 0.0) continue;
    last = a;
    c += p[a];
    if (u < c) return a;
  }
  return last;
}

/// Stream of uniforms unit(prf(key, {stream, i})) for i = 0, 1, …
class CounterStream {
 public:
  CounterStream(std::uint64_t key, std::uint64_t stream) : key_(key), stream_(stream) {}
  double next() { return unit_from(prf(key_, {stream_, counter_++})); }
  std::uint64_t next_bits() { return prf(key_, {stream_, counter_++}); }
  /// Uniform integer in [0, bound), by rejection on 64-bit draws.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} - bound + 1) % bound;
    while (true) {
      const std::uint64_t r = next_bits();
      if (r >= limit) return r % bound;
    }
  }

  // UniformRandomBitGenerator interface, for the standard distributions.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_bits(); }

 private:
  std::uint64_t key_, stream_, counter_ = 0;
};

/// Fisher-Yates shuffle driven by a counter stream.
template <class T>
void shuffle_with(std::vector<T>& v, CounterStream& rs) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rs.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace rdp

#endif  // RDP_RANDOM_HPP
