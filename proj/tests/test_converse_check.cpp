#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rdp/converse.hpp"
#include "rdp/errors.hpp"
#include "test_support.hpp"

using namespace rdp;
using rdp::testing::binary_problem;

namespace {

ProblemSpec side_info_problem() {
  return ProblemSpec(JointTable({2, 2}, {0.35, 0.1, 0.15, 0.4}), 2, DistortionMatrix::hamming(2, 2));
}

// E[d], time-mixed TV and expected empirical TV by direct summation over (x^n, z^n).
CodeEvaluation reference_evaluation(const SmallCode& c, const ProblemSpec& s) {
  const std::size_t n = c.n, X = s.x_size(), Z = s.z_size(), Y = s.y_size;
  std::size_t Xn = 1, Zn = 1;
  for (std::size_t i = 0; i < n; ++i) Xn *= X, Zn *= Z;
  CodeEvaluation ev;
  std::vector<double> px(X, 0.0), py(Y, 0.0);
  for (std::size_t xi = 0; xi < Xn; ++xi)
    for (std::size_t zi = 0; zi < Zn; ++zi) {
      std::vector<std::size_t> x(n), z(n), y(n);
      for (std::size_t i = 0, a = xi, b = zi, q = c.decoder[c.encoder[xi * Zn + zi] * Zn + zi]; i < n; ++i) {
        x[n - 1 - i] = a % X, a /= X;
        z[n - 1 - i] = b % Z, b /= Z;
        y[n - 1 - i] = q % Y, q /= Y;
      }
      double p = 1.0;
      for (std::size_t i = 0; i < n; ++i) p *= s.p(x[i], z[i]);
      std::vector<double> hx(X, 0.0), hy(Y, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        ev.distortion += p * s.d(x[i], y[i]) / n;
        px[x[i]] += p / n;
        py[y[i]] += p / n;
        hx[x[i]] += 1.0 / n;
        hy[y[i]] += 1.0 / n;
      }
      double e = 0.0;
      for (std::size_t a = 0; a < X; ++a) e += std::abs(hx[a] - hy[a]) / 2;
      ev.expected_empirical_tv += p * e;
    }
  for (std::size_t a = 0; a < X; ++a) ev.perception_tv += std::abs(px[a] - py[a]) / 2;
  return ev;
}

}  // namespace

TEST(EvaluateCode, IdentityAndConstantCodes) {
  const auto spec = binary_problem(0.3);
  const SmallCode id{1, 2, {0, 1}, {0, 1}};
  const auto e = evaluate_code(id, spec);
  EXPECT_DOUBLE_EQ(e.rate, 1.0);
  EXPECT_EQ(e.distortion, 0.0);
  EXPECT_EQ(e.perception_tv, 0.0);
  const SmallCode zero{1, 1, {0, 0}, {0}};
  const auto c = evaluate_code(zero, spec);
  EXPECT_EQ(c.rate, 0.0);
  EXPECT_NEAR(c.distortion, 0.3, 1e-15);
  EXPECT_NEAR(c.perception_tv, 0.3, 1e-15);
  EXPECT_NE(zero.describe().find("M=1"), std::string::npos);
}

TEST(EvaluateCode, MatchesDirectSummation) {
  const auto spec = side_info_problem();
  std::mt19937_64 rng(31);
  for (int t = 0; t < 50; ++t) {
    SmallCode c{2, 3, std::vector<std::size_t>(16), std::vector<std::size_t>(12)};
    for (auto& m : c.encoder) m = rng() % 3;
    for (auto& y : c.decoder) y = rng() % 4;
    const auto a = evaluate_code(c, spec), b = reference_evaluation(c, spec);
    EXPECT_NEAR(a.rate, std::log2(3.0) / 2, 1e-15);
    EXPECT_NEAR(a.distortion, b.distortion, 1e-12);
    EXPECT_NEAR(a.perception_tv, b.perception_tv, 1e-12);
    EXPECT_NEAR(a.expected_empirical_tv, b.expected_empirical_tv, 1e-12);
    EXPECT_GE(a.expected_empirical_tv, a.perception_tv - 1e-12);
  }
}

TEST(EvaluateCode, RejectsMalformedCodes) {
  const auto spec = binary_problem(0.3);
  EXPECT_THROW(evaluate_code(SmallCode{1, 2, {0}, {0, 1}}, spec), InputError);
  EXPECT_THROW(evaluate_code(SmallCode{1, 2, {0, 2}, {0, 1}}, spec), InputError);
  EXPECT_THROW(evaluate_code(SmallCode{1, 2, {0, 1}, {0, 2}}, spec), InputError);
  SmallCode huge{30, 1, {}, {}};
  EXPECT_THROW(evaluate_code(huge, spec), BudgetError);
}

TEST(Converse, ExhaustiveFindsNoViolations) {
  for (const auto& spec : {binary_problem(0.5), binary_problem(0.2), side_info_problem()}) {
    for (std::size_t M : {1, 2}) {
      const auto r = exhaustive_check(spec, 1, M, 1e-6);
      EXPECT_EQ(static_cast<double>(r.codes_checked), code_space_size(spec, 1, M));
      EXPECT_TRUE(r.violations.empty());
      EXPECT_GE(r.min_sandwich_slack, -1e-12);
      EXPECT_GT(r.min_margin, -1e-6);
    }
  }
  EXPECT_EQ(code_space_size(side_info_problem(), 1, 2), 256.0);
  EXPECT_THROW(exhaustive_check(side_info_problem(), 2, 2, 1e-6), BudgetError);
}

TEST(Converse, SampledFindsNoViolationsAndIsDeterministic) {
  const auto spec = side_info_problem();
  const auto a = sampled_check(spec, 2, 2, 2000, 4, 1e-6);
  EXPECT_EQ(a.codes_checked, 2000u);
  EXPECT_TRUE(a.violations.empty());
  EXPECT_GE(a.min_sandwich_slack, -1e-12);
  const auto b = sampled_check(spec, 2, 2, 2000, 4, 1e-6);
  EXPECT_EQ(a.min_margin, b.min_margin);
  EXPECT_EQ(a.points_solved, b.points_solved);
  const auto empty = sampled_check(spec, 2, 2, 0, 4, 1e-6);
  EXPECT_EQ(empty.codes_checked, 0u);
  EXPECT_TRUE(empty.violations.empty());
  EXPECT_THROW(sampled_check(spec, 2, 2, 10, 4, -1.0), InputError);
}
