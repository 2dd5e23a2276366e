#ifndef RDP_TOOLS_CLI_APP_HPP
#define RDP_TOOLS_CLI_APP_HPP

// Subcommands of rdp_cli. Every output carries a run manifest: JSON outputs
// embed it under "manifest", CSV outputs get a sibling <out>.manifest.json.
// `replay --manifest F` reruns the recorded command line.
//
// Exit codes: 0 success, 1 input error, 2 not converged, 3 infeasible.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "problem_file.hpp"
#include "rdp/coding.hpp"
#include "rdp/converse.hpp"
#include "rdp/errors.hpp"
#include "rdp/soft_covering.hpp"
#include "rdp/solver.hpp"
#include "rdp/version.hpp"

namespace rdp::cli {

using ojson = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kInputError = 1, kNotConverged = 2, kInfeasible = 3 };

/// Shortest decimal that reads back to the same double.
inline std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Writes to a temporary sibling, then renames over `path`.
inline void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + path);
    f << content;
    f.close();
    if (!f) throw InputError("cannot write " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot write " + path + ": " + ec.message());
}

/// "a:b:step" → a, a+step, …, ≤ b (values rounded to 12 decimals); a lone number is a one-point grid.
inline std::vector<double> parse_grid(const std::string& text, const char* flag) {
  auto to_double = [&](const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw InputError(std::string(flag) + ": cannot parse \"" + s + "\"");
    return v;
  };
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() == 1) return {to_double(parts[0])};
  if (parts.size() != 3) throw InputError(std::string(flag) + ": expected a:b:step");
  const double a = to_double(parts[0]), b = to_double(parts[1]), step = to_double(parts[2]);
  if (!(step > 0.0) || !(b >= a) || !std::isfinite(a) || !std::isfinite(b))
    throw InputError(std::string(flag) + ": need a <= b and step > 0");
  const double count = std::floor((b - a) / step + 1e-9);
  if (count > 1e6) throw InputError(std::string(flag) + ": grid too large");
  std::vector<double> out;
  for (long k = 0; k <= static_cast<long>(count); ++k) out.push_back(std::round((a + k * step) * 1e12) / 1e12);
  return out;
}

struct Options {
  std::string problem, out, trials_out, manifest;
  std::string flavor = "empirical", sim_mode = "automatic", search_mode = "exhaustive";
  std::string grid_delta, grid_pi = "1", grid_n, grid_rate;
  std::optional<double> delta, tol, rate;
  double pi = 1.0, r0 = 0.0, crossover = 0.1;
  std::optional<std::size_t> n;
  std::size_t trials = 100, messages = 2, samples = 10000, seeds = 50;
  std::uint64_t seed = 1;
};

class App {
 public:
  App(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& args) {
    args_ = args;
    CLI::App app{"Rate-distortion-perception toolkit", "rdp_cli"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    auto* solve = app.add_subcommand("solve", "Solve one (delta, pi) point; JSON result");
    problem_flag(solve, true);
    solve->add_option("--delta", o_.delta, "Distortion target")->required();
    solve->add_option("--pi", o_.pi, "Perception (TV) target")->capture_default_str();
    solve->add_option("--flavor", o_.flavor, "rd | empirical | realism | strong-bound")
        ->check(CLI::IsMember({"rd", "empirical", "realism", "strong-bound"}))
        ->capture_default_str();
    solve->add_option("--tol", o_.tol, "Primal-dual gap tolerance");
    solve->add_option("--out", o_.out, "Write JSON here instead of standard output");

    auto* curve = app.add_subcommand("curve", "Sweep a (delta, pi) grid; CSV");
    problem_flag(curve, true);
    curve->add_option("--grid-delta", o_.grid_delta, "a:b:step")->required();
    curve->add_option("--grid-pi", o_.grid_pi, "a:b:step")->capture_default_str();
    curve->add_option("--tol", o_.tol, "Primal-dual gap tolerance");
    curve->add_option("--out", o_.out, "CSV path")->required();

    auto* sim = app.add_subcommand("simulate", "Monte Carlo run of the likelihood-encoder scheme");
    problem_flag(sim, true);
    sim->add_option("--n", o_.n, "Block length")->required();
    sim->add_option("--rate", o_.rate, "Message rate R (bits/symbol)")->required();
    sim->add_option("--r0", o_.r0, "Common randomness rate R0")->capture_default_str();
    sim->add_option("--trials", o_.trials, "Trial count")->capture_default_str();
    sim->add_option("--seed", o_.seed, "Master seed")->capture_default_str();
    sim->add_option("--mode", o_.sim_mode, "automatic | explicit | ensemble")
        ->check(CLI::IsMember({"automatic", "explicit", "ensemble"}))
        ->capture_default_str();
    sim->add_option("--delta", o_.delta, "Build the scheme from the solver at this distortion (no scheme in file)");
    sim->add_option("--pi", o_.pi, "Perception target for the solver-built scheme")->capture_default_str();
    sim->add_option("--out", o_.out, "Write the JSON report here instead of standard output");
    sim->add_option("--trials-out", o_.trials_out, "Per-trial CSV path");

    auto* soft = app.add_subcommand("softcover", "Exact soft-covering TV sweep; CSV");
    soft->add_option("--problem", o_.problem, "Synthesis JSON (default: binary symmetric instance)");
    soft->add_option("--crossover", o_.crossover, "Crossover of the default instance")->capture_default_str();
    soft->add_option("--n", o_.n, "Block length");
    soft->add_option("--grid-n", o_.grid_n, "a:b:step block lengths");
    soft->add_option("--rate", o_.rate, "Codebook rate");
    soft->add_option("--grid-rate", o_.grid_rate, "a:b:step rates");
    soft->add_option("--seeds", o_.seeds, "Codebook seeds per cell")->capture_default_str();
    soft->add_option("--seed", o_.seed, "First codebook seed")->capture_default_str();
    soft->add_option("--out", o_.out, "CSV path")->required();

    auto* conv = app.add_subcommand("converse", "Search small codes for converse violations; JSON report");
    problem_flag(conv, true);
    conv->add_option("--n", o_.n, "Block length");
    conv->add_option("--messages", o_.messages, "Message count M")->capture_default_str();
    conv->add_option("--mode", o_.search_mode, "exhaustive | sampled")
        ->check(CLI::IsMember({"exhaustive", "sampled"}))
        ->capture_default_str();
    conv->add_option("--samples", o_.samples, "Codes drawn in sampled mode")->capture_default_str();
    conv->add_option("--seed", o_.seed, "Sampling seed")->capture_default_str();
    conv->add_option("--tol", o_.tol, "Violation tolerance (default 1e-6)");
    conv->add_option("--out", o_.out, "Write JSON here instead of standard output");

    auto* replay = app.add_subcommand("replay", "Rerun the command recorded in a manifest");
    replay->add_option("--manifest", o_.manifest, "Manifest JSON, or a JSON output embedding one")->required()->check(CLI::ExistingFile);

    std::vector<const char*> argv{"rdp_cli"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out_ << app.help();
      return kOk;
    } catch (const CLI::CallForVersion&) {
      out_ << kVersion << "\n";
      return kOk;
    } catch (const CLI::ParseError& e) {
      const auto subs = app.get_subcommands();
      err_ << "error: " << e.what() << "\n" << (subs.empty() ? app.help() : subs.front()->help());
      return kInputError;
    }

    try {
      if (solve->parsed()) return cmd_solve();
      if (curve->parsed()) return cmd_curve();
      if (sim->parsed()) return cmd_simulate();
      if (soft->parsed()) return cmd_softcover();
      if (conv->parsed()) return cmd_converse();
      return cmd_replay();
    } catch (const InputError& e) {
      err_ << "error: " << e.what() << "\n";
    } catch (const BudgetError& e) {
      err_ << "error: " << e.what() << "\n";
    } catch (const EncodingFailure& e) {
      err_ << "error: " << e.what() << "\n";
    } catch (const nlohmann::json::exception& e) {
      err_ << "error: " << e.what() << "\n";
    }
    return kInputError;
  }

 private:
  void problem_flag(CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--problem", o_.problem, "Problem JSON");
    if (required) opt->required();
  }

  SolverConfig solver_config() const {
    SolverConfig cfg;
    if (o_.tol) cfg.dual_tol = *o_.tol;
    cfg.validate();
    return cfg;
  }

  static ojson solver_json(const SolverConfig& cfg) {
    return {{"max_outer_iters", cfg.max_outer_iters}, {"max_inner_iters", cfg.max_inner_iters},
            {"primal_tol", cfg.primal_tol},           {"dual_tol", cfg.dual_tol},
            {"constraint_tol", cfg.constraint_tol},   {"multiplier_upper_bound", cfg.multiplier_upper_bound}};
  }

  ojson manifest(const std::string& sub, ojson config, const std::string& digest) const {
    ojson m;
    m["subcommand"] = sub;
    m["argv"] = args_;
    m["config"] = std::move(config);
    m["master_seed"] = o_.seed;
    m["version"] = kVersion;
    m["input_digest"] = digest.empty() ? ojson() : ojson(digest);
    return m;
  }

  void emit_json(const ojson& doc) {
    const std::string text = doc.dump(2) + "\n";
    if (o_.out.empty())
      out_ << text;
    else
      write_atomic(o_.out, text);
  }

  void emit_csv(const std::string& path, const std::string& csv, const ojson& m) {
    write_atomic(path, csv);
    write_atomic(path + ".manifest.json", m.dump(2) + "\n");
  }

  static ojson channel_json(const ProblemSpec& spec, const Channel& ch) {
    ojson rows = ojson::array();
    for (std::size_t x = 0; x < spec.x_size(); ++x) {
      ojson per_z = ojson::array();
      for (std::size_t z = 0; z < spec.z_size(); ++z) {
        const std::size_t r = x * spec.z_size() + z;
        if (ch.rows() <= r || !ch.defined(r)) {
          per_z.push_back(nullptr);
          continue;
        }
        const auto row = ch.row(r);
        per_z.push_back(std::vector<double>(row.begin(), row.end()));
      }
      rows.push_back(per_z);
    }
    return rows;
  }

  static int status_code(SolveStatus s) {
    switch (s) {
      case SolveStatus::converged: return kOk;
      case SolveStatus::not_converged: return kNotConverged;
      case SolveStatus::infeasible: return kInfeasible;
    }
    return kNotConverged;
  }

  int cmd_solve() {
    const auto pf = load_problem(o_.problem);
    const auto cfg = solver_config();
    const double delta = *o_.delta;
    RDPSolution sol;
    if (o_.flavor == "rd") {
      sol = solve_conditional_rd(pf.spec, delta, cfg);
    } else if (o_.flavor == "realism") {
      sol = solve_perfect_realism(pf.spec, delta, cfg);
    } else if (o_.flavor == "strong-bound") {
      rdp::detail::check_targets(delta, o_.pi);
      sol = o_.pi >= 1.0 - cfg.constraint_tol ? solve_conditional_rd(pf.spec, delta, cfg)
                                              : solve_perfect_realism(pf.spec, delta, cfg);
    } else {
      sol = solve_empirical_rdp(pf.spec, delta, o_.pi, cfg);
    }
    ojson config{{"problem", o_.problem}, {"delta", delta}, {"pi", o_.pi}, {"flavor", o_.flavor},
                 {"solver", solver_json(cfg)}};
    ojson doc;
    doc["manifest"] = manifest("solve", config, pf.digest);
    doc["flavor"] = o_.flavor;
    doc["delta"] = delta;
    doc["pi"] = o_.pi;
    doc["rate"] = sol.rate;
    doc["operational_rate"] = sol.operational_rate;
    doc["achieved_distortion"] = sol.achieved_distortion;
    doc["achieved_perception_tv"] = sol.achieved_perception_tv;
    doc["lambda_distortion"] = sol.lambda_distortion;
    doc["nu_perception"] = std::isfinite(sol.nu_perception) ? ojson(sol.nu_perception) : ojson("inf");
    doc["dual_bound"] = sol.dual_bound;
    doc["converged"] = sol.converged;
    doc["status"] = to_string(sol.status);
    doc["iterations"] = sol.iterations;
    doc["channel"] = channel_json(pf.spec, sol.channel);
    doc["objective_history"] = sol.objective_history;
    emit_json(doc);
    if (sol.status != SolveStatus::converged) err_ << "solver status: " << to_string(sol.status) << "\n";
    return status_code(sol.status);
  }

  int cmd_curve() {
    const auto pf = load_problem(o_.problem);
    const auto cfg = solver_config();
    const auto deltas = parse_grid(o_.grid_delta, "--grid-delta");
    const auto pis = parse_grid(o_.grid_pi, "--grid-pi");
    const auto rows = sweep_curve(pf.spec, deltas, pis, cfg);
    std::string csv = "delta,pi,rate,achieved_distortion,achieved_tv,converged\n";
    int code = kOk;
    for (const auto& r : rows) {
      csv += num(r.delta) + "," + num(r.pi) + "," + num(r.rate) + "," + num(r.achieved_distortion) + "," +
             num(r.achieved_tv) + "," + (r.converged ? "1" : "0") + "\n";
      if (r.status == SolveStatus::infeasible)
        code = kInfeasible;
      else if (r.status == SolveStatus::not_converged && code == kOk)
        code = kNotConverged;
    }
    ojson config{{"problem", o_.problem}, {"grid_delta", deltas}, {"grid_pi", pis}, {"solver", solver_json(cfg)}};
    emit_csv(o_.out, csv, manifest("curve", config, pf.digest));
    return code;
  }

  int cmd_simulate() {
    const auto pf = load_problem(o_.problem);
    std::optional<SchemeSpec> scheme = pf.scheme;
    ojson config{{"problem", o_.problem}};
    if (!scheme) {
      if (!o_.delta) throw InputError("problem has no scheme (u_alphabet, u_given_z, x_given_zu, y_given_zu); pass --delta to build one from the solver");
      const auto cfg = solver_config();
      const auto sol = solve_empirical_rdp(pf.spec, *o_.delta, o_.pi, cfg);
      if (sol.status == SolveStatus::infeasible) {
        err_ << "solver status: infeasible\n";
        return kInfeasible;
      }
      scheme = scheme_from_channel(pf.spec, sol.channel);
      config["scheme_from_solver"] = {{"delta", *o_.delta}, {"pi", o_.pi}, {"solver", solver_json(cfg)}};
    }
    CodeConfig cc;
    cc.n = *o_.n;
    cc.R = *o_.rate;
    cc.R0 = o_.r0;
    cc.master_seed = o_.seed;
    cc.trials = o_.trials;
    const CodebookMode mode = o_.sim_mode == "explicit"   ? CodebookMode::explicit_codebook
                              : o_.sim_mode == "ensemble" ? CodebookMode::ensemble
                                                          : CodebookMode::automatic;
    const Codebook cb(*scheme, cc, o_.seed, mode);
    const auto run = monte_carlo_run(cb);
    config["n"] = cc.n;
    config["rate"] = cc.R;
    config["r0"] = cc.R0;
    config["trials"] = cc.trials;
    config["mode"] = o_.sim_mode;
    config["trials_out"] = o_.trials_out;
    const auto m = manifest("simulate", config, pf.digest);

    ojson doc;
    doc["manifest"] = m;
    doc["codebook"] = cb.ensemble() ? "ensemble" : "explicit";
    doc["message_threshold"] = scheme->message_threshold();
    doc["sum_threshold"] = scheme->sum_threshold();
    doc["scheme_distortion"] = scheme->expected_distortion();
    doc["mean_distortion"] = run.report.mean_distortion;
    doc["mean_empirical_tv"] = run.report.mean_empirical_tv;
    doc["ci95_distortion"] = run.report.ci95_distortion;
    doc["ci95_tv"] = run.report.ci95_tv;
    doc["trials"] = run.report.trials;
    doc["failures"] = run.report.failures;
    if (!o_.trials_out.empty()) {
      std::string csv = "trial,distortion,empirical_tv,message,m0\n";
      for (std::size_t t = 0; t < run.per_trial.size(); ++t) {
        const auto& r = run.per_trial[t];
        csv += std::to_string(t) + ",";
        if (r)
          csv += num(r->distortion) + "," + num(r->empirical_tv) + "," + std::to_string(r->message) + "," +
                 std::to_string(r->common_randomness);
        else
          csv += ",,,";
        csv += "\n";
      }
      emit_csv(o_.trials_out, csv, m);
    }
    emit_json(doc);
    return kOk;
  }

  int cmd_softcover() {
    SynthesisSpec templ;
    std::string digest;
    if (o_.problem.empty()) {
      templ = binary_synthesis(o_.crossover);
    } else {
      auto sf = parse_synthesis(read_file(o_.problem));
      templ = std::move(sf.spec);
      digest = sf.digest;
    }
    std::vector<std::size_t> ns;
    if (!o_.grid_n.empty()) {
      for (double v : parse_grid(o_.grid_n, "--grid-n")) {
        if (v < 1.0 || v != std::floor(v)) throw InputError("--grid-n: block lengths must be positive integers");
        ns.push_back(static_cast<std::size_t>(v));
      }
    } else if (o_.n) {
      ns.push_back(*o_.n);
    } else {
      throw InputError("softcover: pass --n or --grid-n");
    }
    std::vector<double> rates;
    if (!o_.grid_rate.empty())
      rates = parse_grid(o_.grid_rate, "--grid-rate");
    else if (o_.rate)
      rates.push_back(*o_.rate);
    else
      throw InputError("softcover: pass --rate or --grid-rate");
    rdp::detail::require(o_.seeds >= 1, "--seeds must be >= 1");
    std::vector<std::uint64_t> seeds;
    for (std::size_t k = 0; k < o_.seeds; ++k) seeds.push_back(o_.seed + k);

    const auto cells = rate_sweep(templ, ns, rates, seeds);
    std::string csv = "n,R,threshold,mean_tv,seed_count\n";
    ojson failed = ojson::array();
    for (const auto& c : cells) {
      csv += std::to_string(c.n) + "," + num(c.R) + "," + (c.ok ? num(c.threshold) : "") + "," +
             (c.ok ? num(c.mean_tv) : "") + "," + std::to_string(c.seed_count) + "\n";
      if (!c.ok) failed.push_back({{"n", c.n}, {"R", c.R}, {"error", c.error}});
    }
    ojson config{{"problem", o_.problem}, {"crossover", o_.problem.empty() ? ojson(o_.crossover) : ojson()},
                 {"n", ns},           {"rate", rates},
                 {"seeds", seeds}};
    auto m = manifest("softcover", config, digest);
    m["failed_cells"] = failed;
    emit_csv(o_.out, csv, m);
    return kOk;
  }

  int cmd_converse() {
    const auto pf = load_problem(o_.problem);
    const std::size_t n = o_.n.value_or(o_.search_mode == "sampled" ? 2 : 1);
    const double tol = o_.tol.value_or(1e-6);
    rdp::detail::require(tol >= 0.0, "--tol must be >= 0");
    SolverConfig cfg;
    const auto rep = o_.search_mode == "sampled" ? sampled_check(pf.spec, n, o_.messages, o_.samples, o_.seed, tol, cfg)
                                                 : exhaustive_check(pf.spec, n, o_.messages, tol, cfg);
    ojson config{{"problem", o_.problem}, {"n", n}, {"messages", o_.messages}, {"mode", o_.search_mode},
                 {"samples", o_.search_mode == "sampled" ? ojson(o_.samples) : ojson()},
                 {"tol", tol},             {"solver", solver_json(cfg)}};
    ojson doc;
    doc["manifest"] = manifest("converse", config, pf.digest);
    doc["codes_checked"] = rep.codes_checked;
    doc["screened"] = rep.screened;
    doc["points_solved"] = rep.points_solved;
    doc["unresolved"] = rep.unresolved;
    doc["min_margin"] = rep.min_margin;
    doc["min_sandwich_slack"] = rep.min_sandwich_slack;
    ojson v = ojson::array();
    for (const auto& x : rep.violations)
      v.push_back({{"code", x.code},
                   {"rate", x.rate},
                   {"delta", x.delta},
                   {"pi", x.pi},
                   {"solver_rate", x.solver_rate},
                   {"dual_bound", x.dual_bound}});
    doc["violations"] = v;
    emit_json(doc);
    return kOk;
  }

  int cmd_replay() {
    auto m = nlohmann::json::parse(read_file(o_.manifest));
    if (m.contains("manifest") && m["manifest"].is_object()) m = nlohmann::json(m["manifest"]);
    if (!m.contains("argv") || !m["argv"].is_array()) throw InputError("manifest: missing key \"argv\"");
    const auto argv = m["argv"].get<std::vector<std::string>>();
    if (!argv.empty() && argv.front() == "replay") throw InputError("manifest: refuses to replay a replay");
    if (m.contains("version") && m["version"] != kVersion)
      err_ << "warning: manifest written by version " << m["version"].get<std::string>() << "\n";
    const auto& cfg = m.at("config");
    if (cfg.contains("problem") && cfg["problem"].is_string() && !cfg["problem"].get<std::string>().empty() &&
        m.contains("input_digest") && m["input_digest"].is_string()) {
      const std::string now = digest_hex(read_file(cfg["problem"].get<std::string>()));
      if (now != m["input_digest"].get<std::string>())
        throw InputError("input_digest: problem file changed since the manifest was written");
    }
    App again(out_, err_);
    return again.run(argv);
  }

  std::ostream& out_;
  std::ostream& err_;
  Options o_;
  std::vector<std::string> args_;
};

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return App(out, err).run(args);
}

}  // namespace rdp::cli

#endif  // RDP_TOOLS_CLI_APP_HPP
