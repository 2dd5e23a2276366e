#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rdp/errors.hpp"
#include "rdp/prob.hpp"
#include "rdp/product_tv.hpp"
#include "rdp/random.hpp"
#include "test_support.hpp"

using namespace rdp;
using rdp::testing::random_channel;
using rdp::testing::random_joint;
using rdp::testing::random_masses;
using rdp::testing::random_prob;

namespace {

// sup over events A of |P(A) − Q(A)|, by listing every subset.
double tv_by_subsets(const std::vector<double>& p, const std::vector<double>& q) {
  double best = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << p.size()); ++mask) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (mask >> i & 1) {
        a += p[i];
        b += q[i];
      }
    best = std::max(best, std::abs(a - b));
  }
  return best;
}

double plain_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

// Exact product TV by listing every length-n sequence.
double product_tv_oracle(const std::vector<double>& p, const std::vector<double>& q, std::size_t n) {
  const std::size_t k = p.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= k;
  double l1 = 0.0;
  for (std::size_t s = 0; s < total; ++s) {
    double a = 1.0, b = 1.0;
    std::size_t v = s;
    for (std::size_t i = 0; i < n; ++i) {
      a *= p[v % k];
      b *= q[v % k];
      v /= k;
    }
    l1 += std::abs(a - b);
  }
  return 0.5 * l1;
}

}  // namespace

TEST(ProbVec, RejectsBadMasses) {
  EXPECT_THROW(ProbVec({0.5, 0.6}), InputError);
  EXPECT_THROW(ProbVec({1.2, -0.2}), InputError);
  EXPECT_THROW(ProbVec(std::vector<double>{}), InputError);
  EXPECT_NO_THROW(ProbVec({0.25, 0.75}));
}

TEST(Channel, RejectsBadRowsAndShapes) {
  EXPECT_THROW(Channel({2}, 2, {0.5, 0.5, 0.7, 0.2}), InputError);
  EXPECT_THROW(Channel({2}, 2, {0.5, 0.5}), InputError);
  EXPECT_NO_THROW(Channel({2}, 2, {0.5, 0.5, 0.0, 0.0}, {true, false}));
}

TEST(DistortionMatrix, BoundsAndHamming) {
  EXPECT_THROW(DistortionMatrix(1, 2, {0.0, -1.0}), InputError);
  EXPECT_THROW(DistortionMatrix(1, 2, {0.0, 2.0}, 1.0), InputError);
  const auto h = DistortionMatrix::hamming(2, 3);
  EXPECT_EQ(h(0, 0), 0.0);
  EXPECT_EQ(h(1, 2), 1.0);
  EXPECT_EQ(h.d_max(), 1.0);
}

TEST(TvDistance, SmallCases) {
  EXPECT_DOUBLE_EQ(tv_distance(ProbVec({0.5, 0.5}), ProbVec({0.5, 0.5})), 0.0);
  EXPECT_DOUBLE_EQ(tv_distance(ProbVec({1.0, 0.0}), ProbVec({0.0, 1.0})), 1.0);
  EXPECT_DOUBLE_EQ(tv_distance(ProbVec({0.5, 0.5}), ProbVec({0.75, 0.25})), 0.25);
  EXPECT_THROW(tv_distance(ProbVec({1.0}), ProbVec({0.5, 0.5})), InputError);
}

TEST(TvDistance, HalfL1MatchesSupremumOverEvents) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 300; ++t) {
    const std::size_t k = 1 + t % 4;
    const auto p = random_masses(rng, k, true), q = random_masses(rng, k, true);
    EXPECT_NEAR(tv_distance(p, q), tv_by_subsets(p, q), 1e-12);
    EXPECT_NEAR(tv_distance(p, q), tv_distance(q, p), 1e-15);
  }
}

TEST(TvDistance, PaddedComparesAcrossAlphabetSizes) {
  const std::vector<double> p{0.5, 0.5}, q{0.25, 0.25, 0.5};
  EXPECT_DOUBLE_EQ(tv_distance_padded(p, q), 0.5);
}

TEST(TvProperties, SharedChannelKeepsJointTv) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t a = 2 + t % 3, b = 1 + t % 4;
    const auto p = random_prob(rng, a), q = random_prob(rng, a);
    const auto w = random_channel(rng, {a}, b);
    EXPECT_NEAR(tv_distance(compose(p, w), compose(q, w)), tv_distance(p, q), 1e-12);
  }
}

TEST(TvProperties, MarginalTvAtMostJointTv) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 1000; ++t) {
    const std::vector<std::size_t> dims{2 + static_cast<std::size_t>(t % 3), 1 + static_cast<std::size_t>(t % 2), 2};
    const auto p = random_joint(rng, dims), q = random_joint(rng, dims);
    const double joint = tv_distance(p, q);
    for (std::size_t ax = 0; ax < 3; ++ax)
      EXPECT_LE(tv_distance(marginal(p, ax), marginal(q, ax)), joint + 1e-12);
    EXPECT_LE(tv_distance(marginalize(p, {0, 2}), marginalize(q, {0, 2})), joint + 1e-12);
  }
}

TEST(TvProperties, TriangleInequality) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + t % 5;
    const auto p = random_prob(rng, k), q = random_prob(rng, k), r = random_prob(rng, k);
    EXPECT_LE(tv_distance(p, r), tv_distance(p, q) + tv_distance(q, r) + 1e-12);
  }
}

TEST(TvProperties, ConvexInSecondArgument) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + t % 4, m = 2 + t % 3;
    const auto p = random_prob(rng, k);
    const auto lam = random_masses(rng, m);
    std::vector<double> mix(k, 0.0);
    double rhs = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto qi = random_prob(rng, k);
      for (std::size_t a = 0; a < k; ++a) mix[a] += lam[i] * qi[a];
      rhs += lam[i] * tv_distance(p, qi);
    }
    EXPECT_LE(tv_distance(p.masses(), mix), rhs + 1e-12);
  }
}

TEST(TvProperties, ChannelsNeverIncreaseTv) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 500; ++t) {
    const auto p = random_prob(rng, 3), q = random_prob(rng, 3);
    const auto w = random_channel(rng, {3}, 4);
    EXPECT_LE(tv_distance(marginal(compose(p, w), 1), marginal(compose(q, w), 1)), tv_distance(p, q) + 1e-12);
  }
}

TEST(Empirical, CountsAndPairs) {
  const std::vector<std::size_t> s{0, 1, 0};
  const auto e = empirical(s, 2);
  EXPECT_DOUBLE_EQ(e.mass(0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(e.mass(1), 1.0 / 3.0);
  const std::vector<std::size_t> c{0, 0, 0, 0};
  EXPECT_DOUBLE_EQ(empirical(c, 2).mass(0), 1.0);
  const std::vector<std::size_t> a{0, 1}, b{0, 1};
  const auto j = empirical(a, b, 2, 2).table();
  EXPECT_DOUBLE_EQ(j.at({0, 0}), 0.5);
  EXPECT_DOUBLE_EQ(j.at({1, 1}), 0.5);
  EXPECT_DOUBLE_EQ(j.at({0, 1}), 0.0);
  EXPECT_THROW(empirical(std::vector<std::size_t>{}, 2), InputError);
  EXPECT_THROW(empirical(std::vector<std::size_t>{2}, 2), InputError);
}

TEST(Empirical, IidSampleConvergesToLaw) {
  const ProbVec p({0.2, 0.3, 0.5});
  int misses = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CounterStream rs(seed, 0);
    std::vector<std::size_t> s(10000);
    for (auto& v : s) v = inverse_cdf(p.masses(), rs.next());
    if (tv_distance(empirical(s, 3).prob_vec(), p) >= 0.02) ++misses;
  }
  EXPECT_EQ(misses, 0);
}

TEST(ExpectedDistortion, Couplings) {
  const auto h = DistortionMatrix::hamming(2, 2);
  EXPECT_DOUBLE_EQ(expected_distortion(JointTable({2, 2}, {0.5, 0, 0, 0.5}), h), 0.0);
  EXPECT_DOUBLE_EQ(expected_distortion(JointTable({2, 2}, {0.25, 0.25, 0.25, 0.25}), h), 0.5);
  EXPECT_DOUBLE_EQ(expected_distortion(JointTable({2, 2}, {0, 1, 0, 0}), h), 1.0);
  EXPECT_THROW(expected_distortion(JointTable({3}, {0.2, 0.3, 0.5}), h), InputError);
}

TEST(Information, SimpleValues) {
  EXPECT_DOUBLE_EQ(entropy(ProbVec::uniform(2)), 1.0);
  EXPECT_NEAR(mutual_information(product_law(ProbVec({0.3, 0.7}), ProbVec({0.1, 0.9}))), 0.0, 1e-15);
  // Z copies X: nothing left to learn about X once Z is known.
  std::mt19937_64 rng(6);
  const auto px = random_prob(rng, 3);
  const auto w = random_channel(rng, {3, 3}, 2);
  std::vector<double> xzy(3 * 3 * 2, 0.0);
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t y = 0; y < 2; ++y) xzy[(x * 3 + x) * 2 + y] = px[x] * w(x * 3 + x, y);
  const JointTable j({3, 3, 2}, xzy, 1e-9);
  EXPECT_NEAR(conditional_mutual_information(j, 1), 0.0, 1e-12);
}

TEST(Information, ConditionalMutualInformationMatchesEntropyIdentity) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const auto j = random_joint(rng, {2 + static_cast<std::size_t>(t % 2), 3, 2});
    // Axes X, Y, Z; I(X;Y|Z) = H(XZ) + H(YZ) − H(XYZ) − H(Z).
    auto h = [](const JointTable& t) { return plain_entropy(std::vector<double>(t.flat().begin(), t.flat().end())); };
    const double h_xz = h(marginalize(j, {0, 2}));
    const double h_yz = h(marginalize(j, {1, 2}));
    const double h_z = h(marginalize(j, {2}));
    const double h_all = h(j);
    const double cmi = conditional_mutual_information(j, 2);
    EXPECT_NEAR(cmi, h_xz + h_yz - h_all - h_z, 1e-12);
    EXPECT_GE(cmi, 0.0);
  }
}

TEST(Calculus, MarginalizeComposeCondition) {
  const JointTable id({2, 2}, {0.5, 0, 0, 0.5});
  EXPECT_DOUBLE_EQ(marginal(id, 0)[0], 0.5);
  EXPECT_DOUBLE_EQ(marginal(id, 1)[1], 0.5);
  const auto diag = compose(ProbVec({0.3, 0.7}), Channel::identity(2));
  EXPECT_DOUBLE_EQ(diag.at({0, 0}), 0.3);
  EXPECT_DOUBLE_EQ(diag.at({1, 1}), 0.7);
  EXPECT_DOUBLE_EQ(diag.at({0, 1}), 0.0);
  const auto prod = product_law(ProbVec({0.4, 0.6}), ProbVec({0.1, 0.2, 0.7}));
  const auto c = condition(prod, 1);
  for (std::size_t x = 0; x < 2; ++x) {
    EXPECT_NEAR(c(x, 0), 0.1, 1e-15);
    EXPECT_NEAR(c(x, 2), 0.7, 1e-15);
  }
  std::mt19937_64 rng(8);
  const auto p = random_prob(rng, 4);
  const auto back = marginal(compose(p, random_channel(rng, {4}, 3)), 0);
  for (std::size_t a = 0; a < 4; ++a) EXPECT_NEAR(back[a], p[a], 1e-15);
}

TEST(Calculus, ZeroMassConditioningIsFlagged) {
  const JointTable j({2, 2}, {0.5, 0.5, 0.0, 0.0});
  const auto c = condition(j, 1);
  EXPECT_TRUE(c.defined(0));
  EXPECT_FALSE(c.defined(1));
}

TEST(ProductTv, SmallCases) {
  EXPECT_NEAR(product_tv(ProbVec({0.3, 0.7}), ProbVec({0.3, 0.7}), 10), 0.0, 1e-15);
  EXPECT_NEAR(product_tv(ProbVec({1.0, 0.0}), ProbVec({0.0, 1.0}), 3), 1.0, 1e-15);
  const ProbVec p({0.5, 0.5}), q({0.6, 0.4});
  EXPECT_NEAR(product_tv(p, q, 1), 0.1, 1e-15);
  double prev = 0.0;
  for (std::size_t n : {1, 2, 4, 8}) {
    const double v = product_tv(p, q, n);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(ProductTv, TypeClassSumMatchesSequenceEnumeration) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 40; ++t) {
    const std::size_t k = 2 + t % 2, n = 1 + t % 7;
    const auto p = random_masses(rng, k), q = random_masses(rng, k);
    EXPECT_NEAR(product_tv(ProbVec(p, 1e-9), ProbVec(q, 1e-9), n), product_tv_oracle(p, q, n), 1e-12);
  }
}

TEST(ProductTv, NondecreasingAndAboveSingleLetter) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 10; ++t) {
    const auto p = random_prob(rng, 2), q = random_prob(rng, 2);
    double prev = 0.0;
    for (std::size_t n = 1; n <= 20; ++n) {
      const double v = product_tv(p, q, n);
      EXPECT_GE(v, prev - 1e-12);
      EXPECT_GE(v, tv_distance(p, q) - 1e-12);
      prev = v;
    }
  }
}

TEST(ProductTv, LimsupIsTwoValuedAndSeparates) {
  const ProbVec p({0.5, 0.5}), q({0.6, 0.4});
  EXPECT_EQ(limsup_product_tv(p, p), 0);
  EXPECT_EQ(limsup_product_tv(ProbVec({1.0, 0.0}), ProbVec({0.0, 1.0})), 1);
  EXPECT_EQ(limsup_product_tv(p, q), 1);
  bool separated = false;
  for (std::size_t n = 128; n <= 1024 && !separated; n *= 2) separated = product_tv(p, q, n) > 0.99;
  EXPECT_TRUE(separated);
}

TEST(Randomness, CounterStreamIsPureAndUniform) {
  CounterStream a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_bits(), b.next_bits());
  EXPECT_EQ(prf(1, {2, 3}), prf(1, {2, 3}));
  EXPECT_NE(prf(1, {2, 3}), prf(1, {3, 2}));
  CounterStream c(5, 0);
  std::vector<std::size_t> hist(6, 0);
  for (int i = 0; i < 60000; ++i) ++hist[c.below(6)];
  for (auto h : hist) EXPECT_NEAR(static_cast<double>(h) / 60000.0, 1.0 / 6.0, 0.01);
  const std::vector<double> w{0.0, 0.5, 0.0, 0.5};
  EXPECT_EQ(inverse_cdf(w, 0.0), 1u);
  EXPECT_EQ(inverse_cdf(w, 0.99), 3u);
}
