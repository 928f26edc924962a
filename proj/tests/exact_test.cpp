#include <bit>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <gtest/gtest.h>

#include "sep/chain.hpp"
#include "sep/exact.hpp"

using namespace sep;

namespace {

const double kM1 = (1.0 - std::exp(-2.0)) / 2.0;  // 2-site occupation at t = 1

RateKernel two_site() { return make_nearest_neighbor(SiteWindow::lattice(0, 1), 1.0); }

RateKernel random_kernel(std::mt19937_64& gen, std::size_t lo, std::size_t hi) {
  std::uniform_int_distribution<int> pick(0, 2);
  const auto w = SiteWindow::centered(std::uniform_int_distribution<std::size_t>(lo, hi)(gen));
  switch (pick(gen)) {
    case 0: return make_nearest_neighbor(w, std::uniform_real_distribution<double>(0.3, 2.0)(gen));
    case 1: return make_heavy_tail(w, std::uniform_real_distribution<double>(1.1, 2.0)(gen));
    default: return make_random_environment(w, gen(), 0.2);
  }
}

Configuration random_eta(std::mt19937_64& gen, std::size_t n) {
  std::vector<std::uint8_t> occ(n);
  for (auto& v : occ) v = static_cast<std::uint8_t>(gen() & 1);
  return Configuration(occ);
}

// Law of eta_t from a dense 2^n generator built here, independently of the
// library's sparse one.
Eigen::VectorXd dense_full_law(const RateKernel& k, const Configuration& eta, double t) {
  const std::size_t n = k.size();
  const auto states = static_cast<Eigen::Index>(1u << n);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(states, states);
  for (Eigen::Index s = 0; s < states; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool bi = (s >> i) & 1, bj = (s >> j) & 1;
        if (bi == bj) continue;
        const Eigen::Index to = s ^ static_cast<Eigen::Index>((1u << i) | (1u << j));
        const double r = k.rate_at(i, j);
        q(s, to) += r;
        q(s, s) -= r;
      }
    }
  }
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(states);
  p0(FullLaw::mask_of(eta)) = 1.0;
  return (t * q.transpose()).exp() * p0;
}

double window_step_variance(const RateKernel& k, const Partition& part, double t) {
  const auto eta = step_configuration(k.window(), part);
  return variance_current_exact(k, eta, part, t);
}

}  // namespace

TEST(PairSemigroup, IdentityAtZero) {
  const auto table = pair_semigroup(make_nearest_neighbor(SiteWindow::lattice(0, 3), 1.0), 0.0,
                                    PairKind::exclusion);
  for (std::size_t a = 0; a < table.space.size(); ++a) {
    for (std::size_t b = 0; b < table.space.size(); ++b) EXPECT_EQ(table.at(a, b), a == b ? 1.0 : 0.0);
  }
}

TEST(PairSemigroup, IndependentFactorizes) {
  const auto k = make_heavy_tail(SiteWindow::lattice(0, 4), 1.5);
  const auto pair = pair_semigroup(k, 0.8, PairKind::independent, 1e-12);
  const auto one = semigroup(k, 0.8, 1e-12);
  for (std::size_t x = 0; x < 5; ++x)
    for (std::size_t y = 0; y < 5; ++y)
      for (std::size_t u = 0; u < 5; ++u)
        for (std::size_t v = 0; v < 5; ++v)
          ASSERT_NEAR(pair.at(x, y, u, v), one.at(x, u) * one.at(y, v), 1e-11);
}

TEST(PairSemigroup, TwoSiteExclusionSwap) {
  const auto table = pair_semigroup(two_site(), 1.0, PairKind::exclusion);
  EXPECT_NEAR(table.at(0, 1, 1, 0), kM1, 1e-10);
  EXPECT_NEAR(table.at(0, 1, 0, 1), 1.0 - kM1, 1e-10);
  EXPECT_THROW(table.space.index(0, 0), SepError);
}

TEST(PairSemigroup, ExchangeSymmetryAndRowSums) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto k = random_kernel(gen, 2, 7);
    for (auto kind : {PairKind::independent, PairKind::exclusion}) {
      const auto table = pair_semigroup(k, 1.3, kind);
      const auto& sp = table.space;
      for (std::size_t a = 0; a < sp.size(); ++a) {
        double row = 0.0;
        const auto [x, y] = sp.pair(a);
        for (std::size_t b = 0; b < sp.size(); ++b) {
          row += table.at(a, b);
          const auto [u, v] = sp.pair(b);
          ASSERT_NEAR(table.at(a, b), table.at(sp.index(y, x), sp.index(v, u)), 1e-12);
        }
        ASSERT_NEAR(row, 1.0, 1e-9);
      }
    }
  }
}

TEST(PairSemigroup, ComparisonInequalityForH) {
  // Interacting pairs spread H (x) H less than independent ones.
  std::mt19937_64 gen(22);
  for (int trial = 0; trial < 30; ++trial) {
    const auto k = random_kernel(gen, 2, 8);
    const auto part = Partition::split_at(k.window());
    std::vector<double> h(k.size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = part.h(i);
    const double t = std::uniform_real_distribution<double>(0.0, 5.0)(gen);
    const auto v2 = pair_apply_product(k, PairKind::exclusion, t, h, 1e-12);
    const auto u2 = pair_apply_product(k, PairKind::independent, t, h, 1e-12);
    const PairSpace ex(k.size(), PairKind::exclusion), ind(k.size(), PairKind::independent);
    for (std::size_t a = 0; a < ex.size(); ++a) {
      const auto [x, y] = ex.pair(a);
      ASSERT_LE(v2[a], u2[ind.index(x, y)] + 1e-10);
    }
  }
}

TEST(Covariance, ZeroAtTimeZero) {
  const auto k = make_nearest_neighbor(SiteWindow::lattice(0, 3), 1.0);
  EXPECT_NEAR(cov_exact(k, Configuration({1, 1, 0, 0}), 0.0, 1, 2), 0.0, 1e-15);
}

TEST(Covariance, UseVariancePathOnDiagonal) {
  const auto k = make_nearest_neighbor(SiteWindow::lattice(0, 3), 1.0);
  try {
    cov_exact(k, Configuration({1, 1, 0, 0}), 1.0, 2, 2);
    FAIL();
  } catch (const SepError& e) {
    EXPECT_STREQ(e.what(), "use variance path");
  }
}

TEST(Covariance, MatchesFullLawOnFourSitePath) {
  const auto w = SiteWindow::lattice(0, 3);
  const auto k = make_nearest_neighbor(w, 1.0);
  const Configuration eta({1, 1, 0, 0});
  const auto full = full_law(k, eta, 1.0);
  const double joint = full.prob_all_occupied(full.mask_of_sites({2, 3}));
  const double brute = joint - full.marginal(2) * full.marginal(3);
  EXPECT_NEAR(cov_exact(k, eta, 1.0, 2, 3), brute, 1e-8);
}

TEST(CovarianceProperty, NonpositiveOffDiagonal) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto k = random_kernel(gen, 2, 8);
    const auto eta = random_eta(gen, k.size());
    const double t = std::uniform_real_distribution<double>(0.0, 6.0)(gen);
    const auto cov = covariance_matrix(k, eta, t, 1e-12);
    const auto n = k.size();
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y) {
        if (x != y) ASSERT_LE(cov[x * n + y], 1e-12);
        ASSERT_NEAR(cov[x * n + y], cov[y * n + x], 1e-13);
      }
    }
  }
}

TEST(VarianceIdentity, VacuumAndTwoSite) {
  const auto k = two_site();
  const auto vac = variance_identity(k, Configuration({0, 0}), 1.0);
  EXPECT_EQ(vac.lhs, 0.0);
  EXPECT_EQ(vac.rhs, 0.0);
  const auto id = variance_identity(k, Configuration({1, 0}), 1.0);
  const double closed = (1.0 - std::exp(-4.0)) / 2.0;
  EXPECT_NEAR(closed, 0.4908421, 1e-7);
  EXPECT_NEAR(id.lhs, closed, 1e-9);
  EXPECT_NEAR(id.rhs, closed, 1e-7);
  EXPECT_NEAR(2.0 * kM1 * (1.0 - kM1), closed, 1e-15);
}

TEST(VarianceIdentity, SixSitePath) {
  const auto w = SiteWindow::centered(6);
  const auto k = make_nearest_neighbor(w, 1.0);
  const auto id = variance_identity(k, step_configuration(w, Partition::split_at(w)), 0.5);
  EXPECT_LE(id.abs_err(), 1e-6);
  EXPECT_GT(id.lhs, 0.0);
}

TEST(VarianceIdentityProperty, RandomInstances) {
  std::mt19937_64 gen(24);
  for (int trial = 0; trial < 30; ++trial) {
    const auto k = random_kernel(gen, 2, 8);
    const auto eta = random_eta(gen, k.size());
    for (double t : {0.1, 0.5, 1.0, 5.0}) {
      const auto id = variance_identity(k, eta, t);
      ASSERT_LE(id.abs_err(), std::max(1e-6, 1e-4 * id.lhs)) << "t=" << t;
    }
  }
}

TEST(VarianceIdentity, JsonShape) {
  const nlohmann::json j = variance_identity(two_site(), Configuration({1, 0}), 1.0);
  for (const char* key : {"t", "lhs", "rhs", "abs_err"}) EXPECT_TRUE(j.contains(key)) << key;
}

TEST(AdaptiveSimpson, PolynomialAndFailure) {
  EXPECT_NEAR(adaptive_simpson([](double x) { return x * x * x; }, 0.0, 2.0, 1e-12), 4.0, 1e-12);
  EXPECT_NEAR(adaptive_simpson([](double x) { return std::exp(-x); }, 0.0, 3.0, 1e-10),
              1.0 - std::exp(-3.0), 1e-10);
  try {
    adaptive_simpson([](double x) { return x > 0.3 ? 1.0 : 0.0; }, 0.0, 1.0, 1e-14, nullptr, 4);
    FAIL();
  } catch (const SepError& e) {
    EXPECT_NE(std::string(e.what()).find("error"), std::string::npos);
  }
}

TEST(CurrentVariance, Examples) {
  const auto w = SiteWindow::lattice(0, 1);
  const auto part = Partition::from_a_set(w, {0});
  EXPECT_NEAR(variance_current_exact(two_site(), Configuration({1, 0}), part, 0.0), 0.0, 1e-15);
  const double v = variance_current_exact(two_site(), Configuration({1, 0}), part, 1.0);
  EXPECT_NEAR(v, kM1 * (1.0 - kM1), 1e-10);
  EXPECT_NEAR(v, 0.2454210, 1e-7);
}

TEST(CurrentVariance, MatchesFullLaw) {
  std::mt19937_64 gen(25);
  for (int trial = 0; trial < 20; ++trial) {
    const auto k = random_kernel(gen, 2, 8);
    const auto part = Partition::split_at(k.window());
    const auto eta = random_eta(gen, k.size());
    const double t = std::uniform_real_distribution<double>(0.0, 4.0)(gen);
    const auto law = current_law(full_law(k, eta, t, 12, 1e-12), part);
    ASSERT_NEAR(variance_current_exact(k, eta, part, t, 1e-12), law.variance(), 1e-8);
    ASSERT_NEAR(expected_current(k, eta, part, t, 1e-12), law.mean(), 1e-8);
  }
}

TEST(LowerBound, ConstantEtaGivesZero) {
  const auto w = SiteWindow::lattice(0, 5);
  const auto k = make_heavy_tail(w, 1.5);
  const auto part = Partition::split_at(w, 2);
  EXPECT_EQ(lower_bound_integrand(k, Configuration(std::vector<std::uint8_t>(6, 1)), part, 0.3, 1.0), 0.0);
  EXPECT_THROW(lower_bound_integrand(k, Configuration(std::vector<std::uint8_t>(6, 1)), part, 2.0, 1.0),
               SepError);
}

TEST(LowerBound, BalancedLimitHasUnitWeight) {
  // At the balanced point every q weight is 1, so the integrand reduces to
  // the Dirichlet form.
  const auto w = SiteWindow::lattice(-3, 4);
  const auto k = make_nearest_neighbor(w, 1.0);
  const auto part = Partition::split_at(w);
  const auto eta = step_configuration(w, part);
  const double s = 0.4;
  EXPECT_NEAR(lower_bound_integrand(k, eta, part, s, s + 400.0), variance_integrand(k, eta, s), 1e-9);
}

TEST(LowerBound, BelowFourTimesVariance) {
  const auto w = SiteWindow::centered(6);
  const auto k = make_nearest_neighbor(w, 1.0);
  const auto part = Partition::split_at(w);
  const double lb = lower_bound(k, step_configuration(w, part), part, 1.0);
  EXPECT_GT(lb, 0.0);
  EXPECT_LE(lb, 4.0 * window_step_variance(k, part, 1.0) + 1e-8);
}

TEST(LowerBoundProperty, RandomInstances) {
  std::mt19937_64 gen(26);
  for (int trial = 0; trial < 20; ++trial) {
    const auto k = random_kernel(gen, 2, 8);
    const auto part = Partition::split_at(k.window());
    const auto eta = random_eta(gen, k.size());
    const double t = std::uniform_real_distribution<double>(0.05, 5.0)(gen);
    ASSERT_LE(lower_bound(k, eta, part, t), 4.0 * variance_current_exact(k, eta, part, t) + 1e-8);
  }
}

TEST(FullLaw, PointMassAtZero) {
  const auto k = make_nearest_neighbor(SiteWindow::lattice(0, 3), 1.0);
  const Configuration eta({1, 0, 1, 0});
  const auto full = full_law(k, eta, 0.0);
  EXPECT_EQ(full.law[FullLaw::mask_of(eta)], 1.0);
  const auto law = current_law(full, Partition::split_at(k.window(), 1));
  EXPECT_EQ(law.mean(), 0.0);
  EXPECT_EQ(law.variance(), 0.0);
}

TEST(FullLaw, WindowLimitNamesNmax) {
  const auto k = make_nearest_neighbor(SiteWindow::lattice(0, 12), 1.0);
  try {
    full_law(k, Configuration(std::vector<std::uint8_t>(13, 0)), 1.0);
    FAIL();
  } catch (const SepError& e) {
    EXPECT_NE(std::string(e.what()).find("n_max = 12"), std::string::npos);
  }
}

TEST(FullLawProperty, MatchesDenseExponentialAndConserves) {
  std::mt19937_64 gen(27);
  for (int trial = 0; trial < 15; ++trial) {
    const auto k = random_kernel(gen, 2, 7);
    const auto eta = random_eta(gen, k.size());
    const double t = std::uniform_real_distribution<double>(0.0, 3.0)(gen);
    const auto full = full_law(k, eta, t, 12, 1e-12);
    const auto oracle = dense_full_law(k, eta, t);
    double total = 0.0, wrong_count = 0.0;
    for (std::size_t s = 0; s < full.law.size(); ++s) {
      ASSERT_NEAR(full.law[s], oracle(static_cast<Eigen::Index>(s)), 1e-10);
      ASSERT_GE(full.law[s], -1e-15);
      total += full.law[s];
      if (static_cast<std::size_t>(std::popcount(s)) != eta.particles()) wrong_count += full.law[s];
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
    EXPECT_LE(wrong_count, 1e-10);
  }
}

TEST(CurrentLaw, TwoSiteBernoulli) {
  const auto w = SiteWindow::lattice(0, 1);
  const auto law = current_law(full_law(two_site(), Configuration({1, 0}), 1.0),
                               Partition::from_a_set(w, {0}));
  EXPECT_EQ(law.support_offset, 0);
  ASSERT_GE(law.pmf.size(), 2u);
  EXPECT_NEAR(law.pmf[0], 1.0 - kM1, 1e-10);
  EXPECT_NEAR(law.pmf[1], kM1, 1e-10);
  EXPECT_NEAR(law.total(), 1.0, 1e-10);
}

TEST(CurrentLaw, FourSiteMeanIsExpectedCurrent) {
  const auto w = SiteWindow::lattice(0, 3);
  const auto k = make_nearest_neighbor(w, 1.0);
  const auto part = Partition::split_at(w, 1);
  const auto eta = step_configuration(w, part);
  const auto law = current_law(full_law(k, eta, 1.0), part);
  EXPECT_NEAR(law.mean(), expected_current(k, eta, part, 1.0), 1e-8);
}

TEST(CurrentLaw, NegativeCurrentsUseOffset) {
  // Particles start in B, so the current is nonpositive.
  const auto w = SiteWindow::lattice(0, 3);
  const auto k = make_nearest_neighbor(w, 1.0);
  const auto part = Partition::split_at(w, 1);
  const auto law = current_law(full_law(k, Configuration({0, 0, 1, 1}), 2.0), part);
  EXPECT_EQ(law.support_offset, -2);
  EXPECT_LT(law.mean(), 0.0);
}

TEST(Andjel, Examples) {
  const auto k = make_nearest_neighbor(SiteWindow::lattice(0, 4), 1.0);
  const auto at0 = full_law(k, Configuration({1, 1, 1, 0, 0}), 0.0);
  auto c = andjel_check(at0, {0}, {1, 2});
  EXPECT_EQ(c.lhs, 1.0);
  EXPECT_EQ(c.rhs, 1.0);
  c = andjel_check(at0, {0, 3}, {1});
  EXPECT_EQ(c.lhs, 0.0);
  EXPECT_TRUE(c.holds(1e-10));

  const auto later = full_law(k, Configuration({1, 1, 0, 0, 0}), 0.7);
  c = andjel_check(later, {3}, {4});
  EXPECT_GT(c.rhs, 0.0);
  EXPECT_TRUE(c.holds(1e-10));
  EXPECT_THROW(andjel_check(later, {3}, {3, 4}), SepError);
  EXPECT_THROW(andjel_check(later, {}, {4}), SepError);
}

TEST(SumLaw, JsonShape) {
  SumLaw law{-1, {0.25, 0.5, 0.25}};
  EXPECT_DOUBLE_EQ(law.mean(), 0.0);
  EXPECT_DOUBLE_EQ(law.variance(), 0.5);
  const nlohmann::json j = law;
  EXPECT_EQ(j["support_offset"], -1);
  EXPECT_EQ(j["pmf"].size(), 3u);
}
