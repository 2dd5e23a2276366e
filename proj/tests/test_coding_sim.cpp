#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rdp/coding.hpp"
#include "rdp/errors.hpp"
#include "test_support.hpp"

using namespace rdp;
using rdp::testing::binary_entropy;
using rdp::testing::bsc_scheme;

namespace {

CodeConfig config(std::size_t n, double R, double R0 = 0.0, std::size_t trials = 100, std::uint64_t seed = 1) {
  CodeConfig c;
  c.n = n;
  c.R = R;
  c.R0 = R0;
  c.trials = trials;
  c.master_seed = seed;
  return c;
}

}  // namespace

TEST(FloorPow2, Values) {
  EXPECT_EQ(floor_pow2(0.0).value, 1u);
  EXPECT_EQ(floor_pow2(3.0).value, 8u);
  EXPECT_EQ(floor_pow2(2.5).value, 5u);
  EXPECT_EQ(floor_pow2(10 * 0.3).value, 8u);
  EXPECT_EQ(floor_pow2(0.4).value, 1u);
  const auto big = floor_pow2(80.0);
  EXPECT_FALSE(big.fits);
  EXPECT_NEAR(big.log_value(), 80.0 * std::log(2.0), 1e-9);
  EXPECT_EQ(config(10, 0.3).messages().value, 8u);
}

TEST(Codebook, ModesAndValidation) {
  const auto S = bsc_scheme(0.1, 0.0);
  EXPECT_FALSE(Codebook(S, config(10, 0.5), 1).ensemble());
  EXPECT_TRUE(Codebook(S, config(100, 0.5), 1).ensemble());
  EXPECT_TRUE(Codebook(S, config(10, 0.5), 1, CodebookMode::ensemble).ensemble());
  EXPECT_THROW(Codebook(S, config(100, 0.7), 1, CodebookMode::explicit_codebook), InputError);
  EXPECT_THROW(Codebook(S, config(0, 0.5), 1), InputError);
  EXPECT_THROW(Codebook(S, config(4, -1.0), 1), InputError);
}

TEST(Codeword, DeterministicAndSeedDependent) {
  const auto S = bsc_scheme(0.1, 0.0);
  const Codebook a(S, config(16, 0.25, 0.25), 7), b(S, config(16, 0.25, 0.25), 7), c(S, config(16, 0.25, 0.25), 8);
  const std::vector<std::size_t> z(16, 0);
  bool differs = false;
  for (std::int64_t m = 1; m <= 16; ++m) {
    EXPECT_EQ(codeword(a, z, m, 3), codeword(b, z, m, 3));
    differs = differs || codeword(a, z, m, 3) != codeword(c, z, m, 3);
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(codeword(a, z, 0, 1), InputError);
  EXPECT_THROW(codeword(a, z, 17, 1), InputError);
  EXPECT_THROW(codeword(a, std::vector<std::size_t>(15, 0), 1, 1), InputError);
}

TEST(Codeword, PointMassRowGivesConstantSymbol) {
  const SchemeSpec S(JointTable({2, 1}, {0.5, 0.5}), Channel({1}, 2, {0.0, 1.0}), Channel({1, 2}, 2, {0.5, 0.5, 0.5, 0.5}),
                     Channel({1, 2}, 2, {1, 0, 0, 1}), DistortionMatrix::hamming(2, 2));
  const Codebook cb(S, config(8, 0.5), 3);
  const std::vector<std::size_t> z(8, 0);
  for (std::int64_t m = 1; m <= 16; ++m)
    for (auto u : codeword(cb, z, m, 1)) EXPECT_EQ(u, 1u);
}

TEST(LikelihoodEncode, FrequenciesFollowLikelihoods) {
  // Codewords u = 0 and u = 1; x = 0 has likelihood 3/4 and 1/4.
  const auto cb = Codebook::complete(bsc_scheme(0.25, 0.0), config(1, 1.0));
  const std::vector<std::size_t> x{0}, z{0};
  EXPECT_EQ(codeword(cb, z, 1, 1), std::vector<std::size_t>{0});
  EXPECT_EQ(codeword(cb, z, 2, 1), std::vector<std::size_t>{1});
  const int T = 20000;
  int first = 0;
  for (int t = 0; t < T; ++t) first += likelihood_encode(cb, x, z, 1, prf(99, {static_cast<std::uint64_t>(t)})) == 1;
  EXPECT_NEAR(static_cast<double>(first) / T, 0.75, 0.015);
}

TEST(LikelihoodEncode, FailsWhenNoCodewordExplainsSource) {
  const auto cb = Codebook::complete(bsc_scheme(0.0, 0.0), config(2, 0.5));
  // Only codeword 00 exists; x = 11 has likelihood 0.
  EXPECT_THROW(likelihood_encode(cb, std::vector<std::size_t>{1, 1}, std::vector<std::size_t>{0, 0}, 1, 5),
               EncodingFailure);
}

TEST(Decode, IdentityAndDeterminism) {
  const auto S = bsc_scheme(0.1, 0.0);
  const Codebook cb(S, config(12, 0.5), 4);
  const std::vector<std::size_t> z(12, 0);
  EXPECT_EQ(decode(cb, 5, z, 1, 11), codeword(cb, z, 5, 1));
  const Codebook noisy(bsc_scheme(0.1, 0.3), config(12, 0.5), 4);
  EXPECT_EQ(decode(noisy, 5, z, 1, 11), decode(noisy, 5, z, 1, 11));
}

TEST(MonteCarlo, IdentitySchemeIsLossless) {
  const auto cb = Codebook::complete(bsc_scheme(0.0, 0.0), config(3, 1.0, 0.0, 50));
  const auto rep = monte_carlo(cb);
  EXPECT_EQ(rep.failures, 0u);
  EXPECT_EQ(rep.mean_distortion, 0.0);
  EXPECT_EQ(rep.mean_empirical_tv, 0.0);
}

TEST(MonteCarlo, IndependentCouplingHasHalfDistortion) {
  const SchemeSpec S(JointTable({2, 1}, {0.5, 0.5}), Channel({1}, 1, {1.0}), Channel({1, 1}, 2, {0.5, 0.5}),
                     Channel({1, 1}, 2, {0.5, 0.5}), DistortionMatrix::hamming(2, 2));
  const auto rep = monte_carlo(Codebook(S, config(50, 0.0, 0.0, 400), 2));
  EXPECT_NEAR(rep.mean_distortion, 0.5, 4 * rep.ci95_distortion);
  EXPECT_NEAR(rep.mean_distortion, 0.5, 0.02);
}

TEST(MonteCarlo, DeterministicAcrossThreadCounts) {
  const Codebook cb(bsc_scheme(0.1, 0.1), config(16, 0.6, 0.5, 40, 3), 9);
  const auto a = monte_carlo_run(cb);
  setenv("RDP_THREADS", "4", 1);
  const auto b = monte_carlo_run(cb);
  unsetenv("RDP_THREADS");
  ASSERT_EQ(a.per_trial.size(), b.per_trial.size());
  for (std::size_t t = 0; t < a.per_trial.size(); ++t) {
    ASSERT_TRUE(a.per_trial[t] && b.per_trial[t]);
    EXPECT_EQ(a.per_trial[t]->distortion, b.per_trial[t]->distortion);
    EXPECT_EQ(a.per_trial[t]->message, b.per_trial[t]->message);
    EXPECT_EQ(a.per_trial[t]->common_randomness, b.per_trial[t]->common_randomness);
  }
  EXPECT_EQ(a.report.mean_empirical_tv, b.report.mean_empirical_tv);
}

TEST(MonteCarlo, ConfidenceIntervalShrinksWithTrials) {
  const auto S = bsc_scheme(0.1, 0.1);
  const auto small = monte_carlo(Codebook(S, config(16, 0.6, 0.5, 100), 9));
  const auto large = monte_carlo(Codebook(S, config(16, 0.6, 0.5, 1600), 9));
  EXPECT_GT(small.ci95_distortion, 0.0);
  EXPECT_NEAR(large.ci95_distortion / small.ci95_distortion, 0.25, 0.1);
  EXPECT_THROW(monte_carlo(Codebook(S, config(16, 0.6, 0.5, 1), 9)), InputError);
}

TEST(MonteCarlo, RateBelowThresholdMissesDistortion) {
  const auto S = bsc_scheme(0.11, 0.0);
  EXPECT_NEAR(S.message_threshold(), 1.0 - binary_entropy(0.11), 1e-12);
  const auto rep = monte_carlo(Codebook(S, config(20, S.message_threshold() - 0.3, 0.8, 100), 5));
  EXPECT_GT(rep.mean_distortion, 0.11 + 0.05);
}

TEST(MonteCarlo, EnsembleModeTracksScheme) {
  const auto S = bsc_scheme(0.11, 0.0);
  const Codebook cb(S, config(200, S.message_threshold() + 0.1, 0.6, 40), 5, CodebookMode::ensemble);
  const auto a = monte_carlo(cb), b = monte_carlo(cb);
  EXPECT_EQ(a.mean_distortion, b.mean_distortion);
  EXPECT_LT(a.mean_distortion, 0.11 + 0.03);
  EXPECT_GT(a.mean_distortion, 0.11 - 0.03);
}

TEST(ExactLaw, ValidLawsAndUniformAuxiliary) {
  const auto S = bsc_scheme(0.2, 0.1);
  const Codebook cb(S, config(2, 0.5, 0.5), 3, CodebookMode::explicit_codebook);
  const auto L = exact_joint_law(cb);
  double sp = 0.0, sq = 0.0;
  for (double v : L.P.flat()) sp += v;
  for (double v : L.Q.flat()) sq += v;
  EXPECT_NEAR(sp, 1.0, 1e-12);
  EXPECT_NEAR(sq, 1.0, 1e-12);
  // Q_{X^n} averages the likelihoods of all M·K codewords uniformly.
  const std::uint64_t M = 2, K = 2;
  const auto qx = marginalize(L.Q, {0});
  const std::vector<std::size_t> z{0, 0};
  for (std::size_t a = 0; a < 4; ++a) {
    const std::size_t x[2] = {a / 2, a % 2};
    double v = 0.0;
    for (std::uint64_t m = 1; m <= M; ++m)
      for (std::uint64_t k = 1; k <= K; ++k) {
        const auto u = codeword(cb, z, static_cast<std::int64_t>(m), static_cast<std::int64_t>(k));
        v += S.p_x(0, u[0], x[0]) * S.p_x(0, u[1], x[1]) / static_cast<double>(M * K);
      }
    EXPECT_NEAR(qx.flat()[a], v, 1e-14);
  }
  EXPECT_THROW(exact_joint_law(Codebook(S, config(12, 1.0, 1.0), 3)), BudgetError);
}

TEST(ExactLaw, CompleteCodebookMatchesProductOutput) {
  const auto S = bsc_scheme(0.2, 0.1);
  const auto cb = Codebook::complete(S, config(3, 1.0));
  const auto L = exact_joint_law(cb);
  const auto d = diagnose(cb, L);
  EXPECT_NEAR(d.tv_Q_Pbar_YZ, 0.0, 1e-12);
  EXPECT_NEAR(tv_distance(marginalize(L.P, {0, 2}), marginalize(L.Pbar, {0, 2})), 0.0, 1e-12);
}

TEST(Diagnostics, OrderingsAndSimulationAgreement) {
  const auto S = bsc_scheme(0.15, 0.05);
  const auto cfg = config(3, 0.5, 0.5, 4000, 17);
  const auto rep = proof_diagnostics(S, cfg, {1, 2, 3, 4});
  EXPECT_NEAR(rep.message_threshold, 1.0 - binary_entropy(0.15), 1e-12);
  EXPECT_NEAR(rep.sum_threshold, 1.0 - binary_entropy(0.05), 1e-12);
  for (const auto& d : rep.per_seed) {
    EXPECT_GE(d.strong_tv, d.per_letter_max_tv - 1e-12);
    EXPECT_GE(d.per_letter_max_tv, d.time_mixed_tv - 1e-12);
    EXPECT_GE(d.expected_empirical_tv, d.time_mixed_tv - 1e-12);
    EXPECT_LE(d.strong_tv, 1.0);
  }
  const Codebook cb(S, cfg, 2, CodebookMode::explicit_codebook);
  const auto sim = monte_carlo(cb);
  EXPECT_NEAR(sim.mean_distortion, rep.per_seed[1].expected_distortion, 4 * sim.ci95_distortion + 1e-3);
  EXPECT_NEAR(sim.mean_empirical_tv, rep.per_seed[1].expected_empirical_tv, 4 * sim.ci95_tv + 1e-3);
}
