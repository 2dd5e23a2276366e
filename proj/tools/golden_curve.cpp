// Writes the brute-force reference curve for a problem file, in the curve CSV layout.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cli_app.hpp"
#include "rdp/brute_force.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Brute-force reference curve", "golden_curve"};
  std::string problem, out, grid_delta, grid_pi = "1";
  int resolution = 200;
  app.add_option("--problem", problem, "Problem JSON")->required();
  app.add_option("--grid-delta", grid_delta, "a:b:step")->required();
  app.add_option("--grid-pi", grid_pi, "a:b:step")->capture_default_str();
  app.add_option("--resolution", resolution, "Simplex grid resolution")->capture_default_str();
  app.add_option("--out", out, "CSV path")->required();
  CLI11_PARSE(app, argc, argv);
  try {
    const auto pf = rdp::cli::load_problem(problem);
    const rdp::BruteForceOracle oracle(pf.spec, resolution);
    std::string csv = "delta,pi,rate,achieved_distortion,achieved_tv,converged\n";
    using rdp::cli::num;
    for (double d : rdp::cli::parse_grid(grid_delta, "--grid-delta"))
      for (double p : rdp::cli::parse_grid(grid_pi, "--grid-pi"))
        csv += num(d) + "," + num(p) + "," + num(oracle.query(d, p)) + ",,,1\n";
    rdp::cli::write_atomic(out, csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
