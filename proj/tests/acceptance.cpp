// Acceptance runner: one PASS/FAIL line per criterion. argv[1] is the rdp_cli
// binary used for the determinism check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rdp/brute_force.hpp"
#include "rdp/coding.hpp"
#include "rdp/converse.hpp"
#include "rdp/soft_covering.hpp"
#include "rdp/solver.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace rdp;
using rdp::testing::binary_entropy;
using rdp::testing::binary_problem;
using rdp::testing::random_binary_problem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

std::vector<ProblemSpec> random_specs() {
  std::mt19937_64 rng(2024);
  std::vector<ProblemSpec> specs;
  for (int i = 0; i < 20; ++i) specs.push_back(random_binary_problem(rng, 1 + i % 2));
  return specs;
}

ProblemSpec side_info_problem() {
  return ProblemSpec(JointTable({2, 2}, {0.35, 0.1, 0.15, 0.4}), 2, DistortionMatrix::hamming(2, 2));
}

Outcome analytic_anchor() {
  const auto spec = binary_problem(0.5);
  double worst = 0.0;
  for (double d : {0.05, 0.11, 0.2, 0.3, 0.45})
    worst = std::max(worst, std::abs(solve_empirical_rdp(spec, d, 1.0).rate - (1.0 - binary_entropy(d))));
  return {worst <= 2e-3, fmt("max |R - (1 - H(D))| = %.3g", worst)};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ud(0.0, 0.45), up(0.0, 0.5);
  double worst = 0.0;
  for (const auto& spec : random_specs()) {
    const BruteForceOracle grid(spec, 200);
    for (int k = 0; k < 5; ++k) {
      const double d = ud(rng), p = up(rng);
      worst = std::max(worst, std::abs(solve_empirical_rdp(spec, d, p).rate - grid.query(d, p)));
    }
  }
  return {worst <= 2e-2, fmt("100 points, max |solver - grid| = %.3g", worst)};
}

Outcome tv_properties() {
  using rdp::testing::random_channel;
  using rdp::testing::random_joint;
  using rdp::testing::random_masses;
  using rdp::testing::random_prob;
  std::mt19937_64 rng(3);
  double worst = -1.0;  // largest violation across all properties
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + t % 4;
    const auto p = random_prob(rng, k), q = random_prob(rng, k), r = random_prob(rng, k);
    const auto w = random_channel(rng, {k}, 1 + t % 3);
    worst = std::max(worst, std::abs(tv_distance(compose(p, w), compose(q, w)) - tv_distance(p, q)));
    const std::vector<std::size_t> dims{k, 2, 1 + static_cast<std::size_t>(t % 2)};
    const auto a = random_joint(rng, dims), b = random_joint(rng, dims);
    for (std::size_t ax = 0; ax < 3; ++ax)
      worst = std::max(worst, tv_distance(marginal(a, ax), marginal(b, ax)) - tv_distance(a, b));
    worst = std::max(worst, tv_distance(p, r) - tv_distance(p, q) - tv_distance(q, r));
    const auto lam = random_masses(rng, 3);
    std::vector<double> mix(k, 0.0);
    double rhs = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto qi = random_prob(rng, k);
      for (std::size_t s = 0; s < k; ++s) mix[s] += lam[i] * qi[s];
      rhs += lam[i] * tv_distance(p, qi);
    }
    worst = std::max(worst, tv_distance(p.masses(), mix) - rhs);
  }
  return {worst <= 1e-12, fmt("4 x 1000 instances, worst violation %.3g", worst)};
}

Outcome reduction_and_nesting() {
  auto specs = random_specs();
  specs.push_back(binary_problem(0.5));
  specs.push_back(binary_problem(0.2));
  specs.push_back(side_info_problem());
  double red = 0.0;
  for (const auto& spec : specs)
    for (double d : {0.05, 0.15, 0.3})
      red = std::max(red, std::abs(solve_empirical_rdp(spec, d, 1.0).rate - solve_conditional_rd(spec, d).rate));
  double nest = -1.0;
  for (const auto& spec : {binary_problem(0.5), binary_problem(0.2), side_info_problem()}) {
    const std::vector<double> ds{0.05, 0.1, 0.2, 0.3}, ps{0.0, 0.05, 0.1, 0.25, 1.0};
    for (const auto& row : sweep_curve(spec, ds, ps))
      nest = std::max(nest, row.rate - strong_rdp_bound(spec, row.delta, row.pi));
  }
  return {red <= 1e-6 && nest <= 1e-6,
          fmt("max |R(D,1) - R_cond(D)| = %.3g, max empirical - strong = %.3g", red, nest)};
}

Outcome soft_covering_contrast() {
  std::vector<std::uint64_t> seeds(50);
  for (std::uint64_t i = 0; i < 50; ++i) seeds[i] = i;
  const SynthesisSpec templ{ProbVec({1.0}), Channel({1}, 2, {0.5, 0.5}), Channel({2, 1}, 2, {0.9, 0.1, 0.1, 0.9}),
                            1, 0.0, {}, seeds};
  const auto cells = rate_sweep(templ, {2, 8}, {0.2, 1.0}, seeds);
  const double n2 = cells[1].mean_tv, n8_low = cells[2].mean_tv, n8 = cells[3].mean_tv;
  const bool ok = cells[1].ok && cells[2].ok && cells[3].ok && n8 < n2 && n8_low > 0.5;
  return {ok, fmt("threshold %.3f; R=1: TV(n=2) %.4f, TV(n=8) %.4f; R=0.2: TV(n=8) %.4f", cells[3].threshold, n2, n8,
                  n8_low)};
}

Outcome achievability() {
  const auto spec = binary_problem(0.5);
  const auto sol = solve_empirical_rdp(spec, 0.11, 0.1);
  const auto scheme = scheme_from_channel(spec, sol.channel);
  CodeConfig cc;
  cc.n = 500;
  cc.R = sol.rate + 0.1;
  cc.R0 = std::max(0.0, scheme.sum_threshold() - cc.R) + 0.1;
  cc.trials = 200;
  cc.master_seed = 11;
  const auto rep = monte_carlo(Codebook(scheme, cc, 5));
  const double d_hi = rep.mean_distortion + rep.ci95_distortion, t_hi = rep.mean_empirical_tv + rep.ci95_tv;
  return {d_hi <= 0.13 && t_hi <= 0.12, fmt("R = %.4f, D = %.4f +- %.4f, TV = %.4f +- %.4f, failures %zu", cc.R,
                                            rep.mean_distortion, rep.ci95_distortion, rep.mean_empirical_tv,
                                            rep.ci95_tv, rep.failures)};
}

Outcome proof_diagnostics_trend() {
  const auto scheme = rdp::testing::bsc_scheme(0.1, 0.1);
  std::vector<std::uint64_t> seeds(20);
  for (std::uint64_t i = 0; i < 20; ++i) seeds[i] = i + 1;
  std::vector<double> tv;
  for (std::size_t n = 1; n <= 4; ++n) {
    CodeConfig cc;
    cc.n = n;
    cc.R = scheme.message_threshold() + 0.3;
    cc.R0 = std::max(0.0, scheme.sum_threshold() - scheme.message_threshold()) + 0.3;
    tv.push_back(proof_diagnostics(scheme, cc, seeds).mean.tv_P_Q);
  }
  bool ok = true;
  for (std::size_t i = 1; i < tv.size(); ++i) ok = ok && tv[i] <= tv[i - 1] + 0.02;
  return {ok, fmt("mean d_TV(P, Q) for n = 1..4: %.4f %.4f %.4f %.4f", tv[0], tv[1], tv[2], tv[3])};
}

ConverseReport converse_runs(std::size_t& codes) {
  ConverseReport all;
  all.min_sandwich_slack = std::numeric_limits<double>::infinity();
  codes = 0;
  auto merge = [&](const ConverseReport& r) {
    codes += r.codes_checked;
    all.violations.insert(all.violations.end(), r.violations.begin(), r.violations.end());
    all.unresolved += r.unresolved;
    all.min_sandwich_slack = std::min(all.min_sandwich_slack, r.min_sandwich_slack);
    all.min_margin = std::min(all.min_margin, r.min_margin);
  };
  for (const auto& spec : {binary_problem(0.5), side_info_problem()}) {
    for (std::size_t M : {1, 2}) merge(exhaustive_check(spec, 1, M, 1e-6));
    merge(sampled_check(spec, 2, 2, 10000, 8, 1e-6));
  }
  return all;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no rdp_cli path given"};
  const fs::path dir = fs::temp_directory_path() / "rdp_acceptance_replay";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string prob = std::string(RDP_PROBLEMS_DIR) + "/";
  struct Case {
    std::string args, output, manifest;
  };
  const std::vector<Case> cases{
      {"solve --problem " + prob + "binary_side_info.json --delta 0.1 --pi 0.05", "solve.json", "solve.json"},
      {"curve --problem " + prob + "binary_uniform_hamming.json --grid-delta 0.05:0.3:0.05 --grid-pi 0:0.2:0.1",
       "curve.csv", "curve.csv.manifest.json"},
      {"simulate --problem " + prob + "binary_uniform_hamming.json --n 16 --rate 0.7 --r0 0.5 --trials 50 --seed 3",
       "sim.json", "sim.json"},
      {"simulate --problem " + prob + "binary_uniform_hamming.json --n 100 --rate 0.6 --r0 0.5 --trials 20 "
       "--mode ensemble",
       "ens.json", "ens.json"},
      {"softcover --grid-n 2:6:2 --grid-rate 0.2:1:0.4 --seeds 10", "soft.csv", "soft.csv.manifest.json"},
      {"converse --problem " + prob + "binary_side_info.json --mode sampled --n 2 --samples 500 --seed 2",
       "conv.json", "conv.json"},
  };
  std::size_t same = 0;
  std::string bad;
  for (const auto& c : cases) {
    const fs::path out = dir / c.output;
    const std::string first_cmd = "\"" + cli + "\" " + c.args + " --out \"" + out.string() + "\"";
    if (std::system(first_cmd.c_str()) != 0) {
      bad += " " + c.output + "(run)";
      continue;
    }
    const std::string first = slurp(out);
    const fs::path keep = dir / ("first_" + c.manifest);
    fs::copy_file(dir / c.manifest, keep, fs::copy_options::overwrite_existing);
    fs::remove(out);
    const std::string replay = "\"" + cli + "\" replay --manifest \"" + keep.string() + "\"";
    if (std::system(replay.c_str()) != 0 || slurp(out) != first) {
      bad += " " + c.output;
      continue;
    }
    ++same;
  }
  fs::remove_all(dir);
  return {same == cases.size(),
          fmt("%zu/%zu replays byte-identical%s", same, cases.size(), bad.empty() ? "" : (";" + bad).c_str())};
}

void report(int id, const char* name, double limit_s, const std::function<Outcome()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = f();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = limit_s <= 0.0 || s < limit_s;
  std::printf("%s %d %s: %s (%.1f s%s)\n", o.pass && in_time ? "PASS" : "FAIL", id, name, o.detail.c_str(), s,
              in_time ? "" : ", over time limit");
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  report(1, "analytic RD anchor", 10, analytic_anchor);
  report(2, "oracle equivalence", 300, oracle_equivalence);
  report(3, "TV properties", 30, tv_properties);
  report(4, "reduction and nesting", 60, reduction_and_nesting);
  report(5, "soft-covering phase contrast", 120, soft_covering_contrast);
  report(6, "achievability trend", 300, achievability);
  report(7, "proof diagnostics trend", 180, proof_diagnostics_trend);

  std::size_t codes = 0;
  ConverseReport conv;
  report(8, "converse certification", 180, [&] {
    conv = converse_runs(codes);
    return Outcome{conv.violations.empty(), fmt("%zu codes, %zu violations, %zu unresolved, min margin %.3g", codes,
                                                conv.violations.size(), conv.unresolved, conv.min_margin)};
  });
  report(9, "determinism", 0, [&] { return determinism(cli); });
  report(10, "convexity sandwich", 0, [&] {
    return Outcome{codes > 0 && conv.min_sandwich_slack >= -1e-12,
                   fmt("%zu codes, min E[emp TV] - time-mixed TV = %.3g", codes, conv.min_sandwich_slack)};
  });
  return 0;
}
