#ifndef RDP_TOOLS_PROBLEM_FILE_HPP
#define RDP_TOOLS_PROBLEM_FILE_HPP

// JSON problem files. A source problem carries
//
//   x_alphabet, z_alphabet, y_alphabet   label lists
//   p_xz                                 [x][z] joint masses
//   distortion                           [x][y]
//
// and optionally a scheme factorization: u_alphabet, u_given_z [z][u],
// x_given_zu [z][u][x], y_given_zu [z][u][y]. A null row marks a
// conditioning value that never occurs. A synthesis problem carries
// w_alphabet, u_alphabet, v_alphabet, p_w, u_given_w [w][u], v_given_uw [u][w][v].

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rdp/coding.hpp"
#include "rdp/errors.hpp"
#include "rdp/prob.hpp"
#include "rdp/soft_covering.hpp"
#include "rdp/solver.hpp"

namespace rdp::cli {

using nlohmann::json;

/// FNV-1a over raw bytes, as 16 hex digits.
inline std::string digest_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline const json& key(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw InputError(std::string("missing key \"") + name + "\"");
  return j.at(name);
}

inline std::size_t labels(const json& j, const char* name) {
  const json& v = key(j, name);
  if (!v.is_array() || v.empty()) throw InputError(std::string(name) + ": expected a non-empty list of labels");
  std::set<std::string> seen;
  for (const auto& e : v) {
    const std::string s = e.is_string() ? e.get<std::string>() : e.dump();
    if (!seen.insert(s).second) throw InputError(std::string(name) + ": duplicate label " + s);
  }
  return v.size();
}

inline std::vector<double> numbers(const json& row, std::size_t len, const std::string& where) {
  if (!row.is_array() || row.size() != len)
    throw InputError(where + ": expected a list of " + std::to_string(len) + " numbers");
  std::vector<double> out;
  for (const auto& e : row) {
    if (!e.is_number()) throw InputError(where + ": non-numeric entry");
    out.push_back(e.get<double>());
  }
  return out;
}

// rows × cols matrix, row-major.
inline std::vector<double> matrix(const json& j, const char* name, std::size_t rows, std::size_t cols) {
  const json& v = key(j, name);
  if (!v.is_array() || v.size() != rows)
    throw InputError(std::string(name) + ": expected " + std::to_string(rows) + " rows");
  std::vector<double> out;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = numbers(v[r], cols, std::string(name) + " row " + std::to_string(r));
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

// Channel with conditioning axes `in` (nested lists, outermost first) and
// `out` outputs; null rows are undefined.
inline Channel channel(const json& j, const char* name, const std::vector<std::size_t>& in, std::size_t out) {
  std::vector<double> p;
  std::vector<bool> defined;
  auto rec = [&](auto&& self, const json& v, std::size_t depth, const std::string& where) -> void {
    if (depth == in.size()) {
      if (v.is_null()) {
        p.insert(p.end(), out, 0.0);
        defined.push_back(false);
        return;
      }
      const auto row = numbers(v, out, where);
      p.insert(p.end(), row.begin(), row.end());
      defined.push_back(true);
      return;
    }
    if (!v.is_array() || v.size() != in[depth])
      throw InputError(where + ": expected " + std::to_string(in[depth]) + " entries");
    for (std::size_t k = 0; k < in[depth]; ++k) self(self, v[k], depth + 1, where + "[" + std::to_string(k) + "]");
  };
  rec(rec, key(j, name), 0, name);
  try {
    return Channel(in, out, std::move(p), std::move(defined), 1e-9);
  } catch (const InputError& e) {
    throw InputError(std::string(name) + ": " + e.what());
  }
}

}  // namespace detail

struct ProblemFile {
  ProblemSpec spec;
  std::optional<SchemeSpec> scheme;
  std::string digest;
};

inline ProblemFile parse_problem(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("problem file is not valid JSON: ") + e.what());
  }
  const std::size_t X = detail::labels(j, "x_alphabet");
  const std::size_t Z = detail::labels(j, "z_alphabet");
  const std::size_t Y = detail::labels(j, "y_alphabet");
  ProblemFile pf;
  pf.digest = digest_hex(text);
  auto pm = detail::matrix(j, "p_xz", X, Z);
  auto dm = detail::matrix(j, "distortion", X, Y);
  JointTable p_xz;
  try {
    p_xz = JointTable({X, Z}, std::move(pm), 1e-9);
  } catch (const InputError& e) {
    throw InputError(std::string("p_xz: ") + e.what());
  }
  DistortionMatrix d;
  try {
    d = DistortionMatrix(X, Y, std::move(dm));
  } catch (const InputError& e) {
    throw InputError(std::string("distortion: ") + e.what());
  }
  pf.spec = ProblemSpec(p_xz, Y, d);
  if (j.contains("u_alphabet")) {
    const std::size_t U = detail::labels(j, "u_alphabet");
    auto u = detail::channel(j, "u_given_z", {Z}, U);
    auto x = detail::channel(j, "x_given_zu", {Z, U}, X);
    auto y = detail::channel(j, "y_given_zu", {Z, U}, Y);
    try {
      pf.scheme.emplace(p_xz, std::move(u), std::move(x), std::move(y), d);
    } catch (const InputError& e) {
      throw InputError(std::string("scheme: ") + e.what());
    }
  }
  return pf;
}

inline ProblemFile load_problem(const std::string& path) { return parse_problem(read_file(path)); }

struct SynthesisFile {
  SynthesisSpec spec;
  std::string digest;
};

inline SynthesisFile parse_synthesis(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("synthesis file is not valid JSON: ") + e.what());
  }
  const std::size_t W = detail::labels(j, "w_alphabet");
  const std::size_t U = detail::labels(j, "u_alphabet");
  const std::size_t V = detail::labels(j, "v_alphabet");
  SynthesisFile sf;
  sf.digest = digest_hex(text);
  auto pw = detail::numbers(detail::key(j, "p_w"), W, "p_w");
  try {
    sf.spec.p_w = ProbVec(std::move(pw), 1e-9);
  } catch (const InputError& e) {
    throw InputError(std::string("p_w: ") + e.what());
  }
  sf.spec.u_given_w = detail::channel(j, "u_given_w", {W}, U);
  sf.spec.v_given_uw = detail::channel(j, "v_given_uw", {U, W}, V);
  return sf;
}

/// Uniform binary U, V = U through a symmetric channel with the given crossover, W trivial.
inline SynthesisSpec binary_synthesis(double crossover) {
  rdp::detail::require(crossover >= 0.0 && crossover <= 1.0, "crossover must lie in [0, 1]");
  SynthesisSpec s;
  s.p_w = ProbVec({1.0});
  s.u_given_w = Channel({1}, 2, {0.5, 0.5});
  s.v_given_uw = Channel({2, 1}, 2, {1.0 - crossover, crossover, crossover, 1.0 - crossover});
  return s;
}

}  // namespace rdp::cli

#endif  // RDP_TOOLS_PROBLEM_FILE_HPP
