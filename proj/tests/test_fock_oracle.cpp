#include <gtest/gtest.h>

#include <random>

#include "eitbs/fock_oracle.hpp"
#include "eitbs/splitter.hpp"

using namespace eitbs;

namespace {

constexpr double kTol = 1e-10;

double prob(const Distribution& d, std::vector<int> pattern) {
  const auto it = d.find(pattern);
  return it == d.end() ? 0.0 : it->second;
}

// Two distinguishable particles entering modes 0 and 1, each routed on its own.
Distribution independent_routing(const Eigen::MatrixXcd& t) {
  Distribution d;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double pa = a < 2 ? std::norm(t(a, 0)) : 1.0 - std::norm(t(0, 0)) - std::norm(t(1, 0));
      const double pb = b < 2 ? std::norm(t(b, 1)) : 1.0 - std::norm(t(0, 1)) - std::norm(t(1, 1));
      std::vector<int> pattern(2, 0);
      if (a < 2) ++pattern[a];
      if (b < 2) ++pattern[b];
      d[pattern] += pa * pb;
    }
  return d;
}

SplitterMatrix random_passive(std::mt19937_64& rng, bool balanced) {
  std::uniform_real_distribution<double> mag(0.05, 1.0), ph(-kPi, kPi);
  SplitterMatrix m{std::polar(mag(rng), ph(rng)), std::polar(mag(rng), ph(rng)), std::polar(mag(rng), ph(rng)),
                   std::polar(mag(rng), ph(rng))};
  if (balanced) m.r2 = std::polar(std::abs(m.t1 * m.t2) / std::abs(m.r1), std::arg(m.r2));
  const double top = hermiticity_report(m).singular_values[0];
  const double scale = std::uniform_real_distribution<double>(0.3, 1.0)(rng) / top;
  return {m.t1 * scale, m.r1 * scale, m.t2 * scale, m.r2 * scale};
}

// 2ab / (a^2 + b^2) with a = |t1 t2|, b = |r1 r2|: 1 exactly when balanced.
double imbalance_factor(const SplitterMatrix& m) {
  const double a = std::abs(m.t1 * m.t2), b = std::abs(m.r1 * m.r2);
  return 2.0 * a * b / (a * a + b * b);
}

}  // namespace

TEST(Dilate, IdentityStaysIdentity) {
  const auto net = dilate(Eigen::MatrixXcd::Identity(2, 2));
  EXPECT_LT((net.dilation - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(net.port_labels.size(), 4u);
  EXPECT_EQ(net.port_labels[0], "magnon");
  EXPECT_EQ(net.port_labels[2], "loss_0");
}

TEST(Dilate, HalfIdentityCompletion) {
  const auto net = dilate(Eigen::MatrixXcd(0.5 * Eigen::MatrixXcd::Identity(2, 2)));
  Eigen::JacobiSVD<Eigen::MatrixXcd> top(net.dilation.topRightCorner(2, 2));
  Eigen::JacobiSVD<Eigen::MatrixXcd> bottom(net.dilation.bottomLeftCorner(2, 2));
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(top.singularValues()(j), std::sqrt(0.75), 1e-14);
    EXPECT_NEAR(bottom.singularValues()(j), std::sqrt(0.75), 1e-14);
  }
}

TEST(Dilate, RandomPassiveMatricesAreUnitary) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = random_passive(rng, trial % 2 == 0);
    const auto net = dilate(m);
    EXPECT_LT((net.dilation.adjoint() * net.dilation - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff(),
              1e-10);
    EXPECT_EQ(net.dilation(0, 0), m.t1);
    EXPECT_EQ(net.dilation(0, 1), m.r2);
    EXPECT_EQ(net.dilation(1, 0), m.r1);
    EXPECT_EQ(net.dilation(1, 1), m.t2);
  }
}

TEST(Dilate, RejectsGain) {
  EXPECT_THROW(dilate(SplitterMatrix{1.0, 0.5, 1.0, 0.5}), DomainError);
  EXPECT_THROW(dilate(Eigen::MatrixXcd::Identity(5, 5)), DomainError);
  EXPECT_THROW(dilate(Eigen::MatrixXcd(2, 3)), DomainError);
  // Within the rounding allowance.
  EXPECT_NO_THROW(dilate(Eigen::MatrixXcd((1.0 + 1e-12) * Eigen::MatrixXcd::Identity(2, 2))));
}

TEST(OutputDistribution, TextbookHongOuMandel) {
  const double s = std::sqrt(0.5);
  const cplx i{0.0, 1.0};
  const auto net = dilate(SplitterMatrix{s, i * s, s, i * s});
  const auto d = output_distribution(net, pair_input(1.0));
  EXPECT_NEAR(prob(d, {1, 1}), 0.0, kTol);
  EXPECT_NEAR(prob(d, {2, 0}), 0.5, kTol);
  EXPECT_NEAR(prob(d, {0, 2}), 0.5, kTol);
  EXPECT_NEAR(g2_from_distribution(d, net, pair_input(1.0)), 0.0, 1e-9);
}

TEST(OutputDistribution, AllRealBalancedSplitterAntiBunches) {
  // Balanced magnitudes, every phase zero, scaled by 1/sqrt(2) to be passive.
  const auto net = dilate(SplitterMatrix{0.5, 0.5, 0.5, 0.5});
  const auto d = output_distribution(net, pair_input(1.0));
  EXPECT_NEAR(g2_from_distribution(d, net, pair_input(1.0)), 2.0, 1e-12);
  // |t1 t2 + r1 r2|^2 against 2 * 1/16 for independent routing.
  EXPECT_NEAR(prob(d, {1, 1}), 0.25, kTol);
}

TEST(OutputDistribution, SixOutcomesIncludingLoss) {
  const auto net = dilate(SplitterMatrix{0.4, 0.5, 0.45, 0.3});
  const auto d = output_distribution(net, pair_input(0.6));
  EXPECT_EQ(d.size(), 6u);
  for (const auto& pattern : std::vector<std::vector<int>>{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {0, 2}, {1, 1}})
    EXPECT_TRUE(d.count(pattern)) << pattern[0] << pattern[1];
  EXPECT_NEAR(total_probability(d), 1.0, 1e-9);
}

TEST(OutputDistribution, DistinguishableMatchesIndependentRouting) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = random_passive(rng, false);
    const auto net = dilate(m);
    const auto d = output_distribution(net, pair_input(0.0));
    const auto ref = independent_routing(net.transfer);
    for (const auto& [pattern, p] : ref) EXPECT_NEAR(prob(d, pattern), p, kTol);
    EXPECT_NEAR(g2_from_distribution(d, net, pair_input(0.0)), 1.0, 1e-9);
  }
}

TEST(OutputDistribution, UnitaryNetworksLoseNothing) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ph(-kPi, kPi), th(0.1, 1.4);
  for (int trial = 0; trial < 20; ++trial) {
    const double t = th(rng);
    const cplx a = std::polar(1.0, ph(rng)), b = std::polar(1.0, ph(rng)), c = std::polar(1.0, ph(rng));
    // U = diag(a, b) * rotation * diag(1, c)
    SplitterMatrix m{a * std::cos(t), b * std::sin(t), -b * c * std::cos(t), a * c * std::sin(t)};
    const auto net = dilate(m);
    const auto d = output_distribution(net, pair_input(0.7));
    EXPECT_NEAR(survival_probability(d, 2), 1.0, 1e-12);
    for (const auto& [pattern, p] : d)
      if (pattern[0] + pattern[1] < 2) EXPECT_NEAR(p, 0.0, 1e-15);
  }
}

TEST(OutputDistribution, ExchangeSymmetry) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s1 = random_passive(rng, true), s2 = random_passive(rng, true);
    const Eigen::MatrixXcd t = cascade_transfer(s1, s2, 0.8);
    const FockInput in = chain_input(0.7, 0.4);
    const auto ref = output_distribution(dilate(t), in);
    // Relabel inputs (2, 0, 1): columns and overlap structure move together.
    const std::vector<int> perm{2, 0, 1};
    Eigen::MatrixXcd tp(3, 3);
    Eigen::MatrixXd op(3, 3);
    for (int j = 0; j < 3; ++j) {
      tp.col(j) = t.col(perm[j]);
      for (int k = 0; k < 3; ++k) op(j, k) = in.overlaps(perm[j], perm[k]);
    }
    FockInput permuted{{1, 1, 1}, op};
    const auto got = output_distribution(dilate(tp), permuted);
    ASSERT_EQ(got.size(), ref.size());
    for (const auto& [pattern, p] : ref) EXPECT_NEAR(prob(got, pattern), p, 1e-14);
  }
}

TEST(OutputDistribution, ProbabilitiesSumToOne) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s1 = random_passive(rng, false), s2 = random_passive(rng, false);
    const auto net = cascade_three(s1, s2, std::polar(u(rng), 1.0));
    const auto d = output_distribution(net, chain_input(u(rng), u(rng)));
    EXPECT_NEAR(total_probability(d), 1.0, 1e-9);
    for (const auto& [pattern, p] : d) EXPECT_GE(p, -1e-15);
  }
}

TEST(OutputDistribution, InputValidation) {
  const auto net = dilate(SplitterMatrix{0.5, 0.5, 0.5, 0.5});
  EXPECT_THROW(output_distribution(net, FockInput{{1, 1, 0}, Eigen::MatrixXd::Ones(2, 2)}), ConfigError);
  EXPECT_THROW(output_distribution(net, FockInput{{2, 0}, Eigen::MatrixXd::Ones(2, 2)}), ConfigError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.3, 0.4, 1.0;
  EXPECT_THROW(output_distribution(net, FockInput{{1, 1}, asym}), ConfigError);
  Eigen::MatrixXd diag(2, 2);
  diag << 0.9, 0.3, 0.3, 1.0;
  EXPECT_THROW(output_distribution(net, FockInput{{1, 1}, diag}), ConfigError);
  // Amplitude overlaps 1, 1, 0 cannot come from three unit vectors.
  Eigen::MatrixXd bad(3, 3);
  bad << 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0;
  EXPECT_THROW(output_distribution(cascade_three(SplitterMatrix{0.5, 0.5, 0.5, 0.5}, SplitterMatrix{0.5, 0.5, 0.5, 0.5}),
                                   FockInput{{1, 1, 1}, bad}),
               ConfigError);
  EXPECT_THROW(output_distribution(dilate(Eigen::MatrixXcd(0.5 * Eigen::MatrixXcd::Identity(4, 4))),
                                   identical_input({1, 1, 1, 1})),
               DomainError);
}

TEST(G2FromDistribution, ZeroReferenceIsUndefined) {
  const auto net = dilate(SplitterMatrix{1.0, 0.0, 0.0, 0.0});
  const auto d = output_distribution(net, pair_input(1.0));
  EXPECT_THROW(g2_from_distribution(d, net, pair_input(1.0)), DomainError);
}

TEST(G2FromDistribution, MeasuredMagnitudesAtDerivedOverlap) {
  const SplitterMatrix m{std::sqrt(0.15), std::sqrt(0.20), std::sqrt(0.26), std::sqrt(0.22)};
  const auto net = dilate(m);
  const auto in = pair_input(0.75);
  const double g = g2_from_distribution(output_distribution(net, in), net, in);
  // These magnitudes are slightly unbalanced (|t1 t2| != |r1 r2|), which pulls
  // the result below 1 + I by 0.75 (1 - f), f = 0.99818.
  EXPECT_NEAR(g, 1.0 + 0.75 * imbalance_factor(m), 1e-12);
  EXPECT_NEAR(g, 1.75, 2e-3);
}

// For a passive 2x2 matrix the oracle gives exactly 1 + I f cos(phi_rt), so it
// equals the closed form 1 + I cos(phi_rt) when the splitting is balanced and
// deviates by at most I |cos(phi_rt)| (1 - f) otherwise.
TEST(G2FromDistribution, AgreesWithClosedFormOnRandomMatrices) {
  std::mt19937_64 rng(2024);
  double worst_unbalanced = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const bool balanced = trial < 50;
    const auto m = random_passive(rng, balanced);
    const auto net = dilate(m);
    const double phi = phi_rt_of_matrix(m);
    const double f = imbalance_factor(m);
    for (double overlap : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const auto in = pair_input(overlap);
      const double g = g2_from_distribution(output_distribution(net, in), net, in);
      const double closed = 1.0 + overlap * std::cos(phi);
      if (balanced) {
        EXPECT_NEAR(g, closed, 1e-6);
      } else {
        EXPECT_NEAR(g, 1.0 + overlap * f * std::cos(phi), 1e-9);
        EXPECT_LE(std::abs(g - closed), overlap * std::abs(std::cos(phi)) * (1.0 - f) + 1e-9);
        worst_unbalanced = std::max(worst_unbalanced, std::abs(g - closed));
      }
    }
  }
  RecordProperty("worst_unbalanced_deviation", std::to_string(worst_unbalanced));
}

TEST(Cascade, IdentityStagesRouteEachPhotonToItsOwnBin) {
  const SplitterMatrix id{};
  const Eigen::MatrixXcd t = cascade_transfer(id, id);
  Eigen::MatrixXcd expect(3, 3);
  // photon 2 -> first emission, photon 3 -> second emission, magnon -> readout.
  expect << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  EXPECT_LT((t - expect).cwiseAbs().maxCoeff(), 1e-15);
  const auto net = cascade_three(id, id);
  const auto d = output_distribution(net, chain_input(1.0, 1.0));
  EXPECT_NEAR(prob(d, {1, 1, 1}), 1.0, kTol);
}

TEST(Cascade, IdealThreePhotonCorrelation) {
  const auto stage = ideal_nonhermitian_stage();
  const auto net = cascade_three(std::vector<SplitterMatrix>{stage, stage});
  const auto in = chain_input(1.0, 1.0);
  EXPECT_NEAR(g3_from_distribution(output_distribution(net, in), net, in), 4.0, 1e-9);
}

TEST(Cascade, FirstPairOnlyOverlapping) {
  const auto stage = ideal_nonhermitian_stage();
  const auto net = cascade_three(stage, stage);
  const auto in = chain_input(1.0, 0.0);
  EXPECT_NEAR(g3_from_distribution(output_distribution(net, in), net, in), 2.0, 1e-9);
}

TEST(Cascade, Validation) {
  const auto stage = ideal_nonhermitian_stage();
  EXPECT_THROW(cascade_three(std::vector<SplitterMatrix>{stage}), ConfigError);
  EXPECT_THROW(cascade_three(stage, stage, 1.5), DomainError);
  EXPECT_THROW(cascade_three(SplitterMatrix{1.0, 1.0, 1.0, 1.0}, stage), DomainError);
}
