#ifndef RDP_REGION_HPP
#define RDP_REGION_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"
#include "rdp/product_tv.hpp"
#include "rdp/solver.hpp"

namespace rdp {

/// A rate-distortion-perception tuple (R, R0, Δ, Π).
struct RegionPoint {
  double R = 0.0, R0 = 0.0, delta = 0.0, pi = 0.0;
};

enum class RegionFlavor { empirical, strong_minus, strong_plus };

inline constexpr double kRegionTol = 1e-9;

/// Single-letter quantities of a joint law over X × Y × Z × U.
struct RegionQuantities {
  double i_xy_given_z = 0.0;  ///< I(X;Y|Z)
  double i_xu_given_z = 0.0;  ///< I(X;U|Z)
  double i_yu_given_z = 0.0;  ///< I(Y;U|Z)
  double distortion = 0.0;
  double tv = 0.0;                ///< d_TV(P_X, P_Y) on the padded alphabet
  double markov_residual = 0.0;   ///< max |P(x,y|u,z) − P(x|u,z) P(y|u,z)|
  int limsup_tv = 0;
};

inline RegionQuantities region_quantities(const JointTable& xyzu, const DistortionMatrix& d) {
  detail::require(xyzu.rank() == 4, "check_region_membership: joint must have axes X, Y, Z, U");
  const std::size_t X = xyzu.dim(0), Y = xyzu.dim(1), Z = xyzu.dim(2), U = xyzu.dim(3);
  detail::require(d.rows() == X && d.cols() == Y, "check_region_membership: distortion shape mismatch");
  RegionQuantities q;
  const std::size_t ax[] = {0}, ay[] = {1}, az[] = {2}, au[] = {3};
  q.i_xy_given_z = conditional_mutual_information(xyzu, ax, ay, az);
  q.i_xu_given_z = conditional_mutual_information(xyzu, ax, au, az);
  q.i_yu_given_z = conditional_mutual_information(xyzu, ay, au, az);
  q.distortion = expected_distortion(marginalize(xyzu, {0, 1}), d);
  const auto px = marginal(xyzu, 0), py = marginal(xyzu, 1);
  q.tv = tv_distance_padded(px.masses(), py.masses());
  q.limsup_tv = limsup_product_tv(px.masses(), py.masses());
  for (std::size_t z = 0; z < Z; ++z)
    for (std::size_t u = 0; u < U; ++u) {
      double m = 0.0;
      std::vector<double> mx(X, 0.0), my(Y, 0.0);
      for (std::size_t x = 0; x < X; ++x)
        for (std::size_t y = 0; y < Y; ++y) {
          const double v = xyzu.at({x, y, z, u});
          m += v;
          mx[x] += v;
          my[y] += v;
        }
      if (m <= 0.0) continue;
      for (std::size_t x = 0; x < X; ++x)
        for (std::size_t y = 0; y < Y; ++y)
          q.markov_residual =
              std::max(q.markov_residual, std::abs(xyzu.at({x, y, z, u}) / m - (mx[x] / m) * (my[y] / m)));
    }
  return q;
}

/// Whether `point` satisfies the defining inequalities of the γ-region of the
/// given flavor with the auxiliary law `xyzu` as witness. f(Δ) is evaluated
/// by the solver on the source law P_XZ of the witness.
inline bool check_region_membership(const JointTable& xyzu, const DistortionMatrix& d, const RegionPoint& point,
                                    RegionFlavor flavor, double gamma, const SolverConfig& cfg = {}) {
  detail::require(gamma > 0.0, "check_region_membership: gamma must be positive");
  detail::require(point.R >= 0.0 && point.R0 >= 0.0 && point.delta >= 0.0 && point.pi >= 0.0 && point.pi <= 1.0,
                  "check_region_membership: point out of range");
  const auto q = region_quantities(xyzu, d);
  const double t = kRegionTol;
  if (point.delta < q.distortion - t) return false;

  if (flavor == RegionFlavor::empirical)
    return point.R >= q.i_xy_given_z + gamma - t && point.pi >= q.tv - t;

  const ProblemSpec spec(marginalize(xyzu, {0, 2}), xyzu.dim(1), d);
  const int f = f_function(spec, point.delta, cfg);
  if (flavor == RegionFlavor::strong_plus)
    return point.pi >= f && point.R >= q.i_xy_given_z + gamma - t;

  return point.pi < f && point.R0 > 0.0 && q.markov_residual <= t && point.R >= q.i_xu_given_z + gamma - t &&
         point.R + point.R0 >= q.i_yu_given_z + gamma - t && point.pi >= q.limsup_tv;
}

}  // namespace rdp

#endif  // RDP_REGION_HPP
