#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "sep/analysis.hpp"
#include "sep/exact.hpp"
#include "sep/rayleigh.hpp"

using namespace sep;

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

StepCdf random_step(std::mt19937_64& gen) {
  const auto n = std::uniform_int_distribution<int>(1, 8)(gen);
  std::vector<std::pair<double, double>> atoms;
  for (int k = 0; k < n; ++k) {
    atoms.emplace_back(std::uniform_real_distribution<double>(-2.0, 2.0)(gen),
                       std::uniform_real_distribution<double>(0.05, 1.0)(gen));
  }
  return StepCdf(atoms);
}

// Brute-force Levy distance on a dense grid, for step F against N(0,1).
double brute_levy(const StepCdf& f) {
  auto fits = [&](double eps) {
    for (double x = -8.0; x <= 8.0; x += 2e-4) {
      const double g = phi(x);
      if (f(x - eps) - eps > g + 1e-12 || g > f(x + eps) + eps + 1e-12) return false;
    }
    for (double b : f.breakpoints()) {
      for (double x : {b - eps, b + eps}) {
        const double g = phi(x);
        if (f(x - eps) - eps > g + 1e-12 || g > f.left_limit(x + eps) + eps + 1e-12) return false;
      }
    }
    return true;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    (fits(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

TEST(NormalCdf, MatchesErfcWithinDocumentedError) {
  for (double x = -8.0; x <= 8.0; x += 0.001) ASSERT_NEAR(normal_cdf(x), phi(x), 1e-7) << x;
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-7);
}

TEST(StepCdf, MergesAndNormalizes) {
  const StepCdf f({{1.0, 1.0}, {0.0, 2.0}, {1.0, 1.0}});
  EXPECT_EQ(f.breakpoints().size(), 2u);
  EXPECT_DOUBLE_EQ(f(0.0), 0.5);
  EXPECT_DOUBLE_EQ(f.left_limit(0.0), 0.0);
  EXPECT_DOUBLE_EQ(f(0.999), 0.5);
  EXPECT_DOUBLE_EQ(f(1.0), 1.0);
  EXPECT_DOUBLE_EQ(f(-5.0), 0.0);
}

TEST(Ks, FairCoinLaw) {
  const auto r = normality_report(SumLaw{0, {0.5, 0.5}});
  EXPECT_NEAR(r.ks_distance, phi(1.0) - 0.5, 1e-7);
  EXPECT_NEAR(r.ks_distance, 0.3413447, 1e-7);
  EXPECT_LE(r.levy_distance, r.ks_distance);
  EXPECT_EQ(r.n_samples, 0u);
  EXPECT_EQ(r.ks_stderr, 0.0);
}

TEST(Ks, BinomialHundredUnderBerryEsseen) {
  std::vector<double> p(100, 0.5);
  const auto pmf = bernoulli_convolution(p);
  const auto r = normality_report(SumLaw{0, pmf}, 0.2);
  EXPECT_LE(r.ks_distance, kEsseenConstant * std::pow(25.0, -0.5));
  EXPECT_LT(r.ks_distance, 0.05);
  ASSERT_TRUE(r.esseen_rate.has_value());
}

TEST(Ks, NormalSamples) {
  std::mt19937_64 gen(51);
  std::normal_distribution<double> z;
  std::vector<std::pair<double, double>> atoms;
  for (int i = 0; i < 100000; ++i) atoms.emplace_back(z(gen), 1.0);
  EXPECT_LE(ks_distance(StepCdf(atoms), StandardNormalCdf{}), 0.006);
}

TEST(Ks, AgainstBruteForce) {
  std::mt19937_64 gen(52);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = random_step(gen);
    double brute = 0.0;
    for (double b : f.breakpoints()) {
      brute = std::max({brute, std::abs(f(b) - phi(b)), std::abs(f.left_limit(b) - phi(b))});
    }
    ASSERT_NEAR(ks_distance(f, StandardNormalCdf{}), brute, 2e-7);
  }
}

TEST(Ks, StepAgainstStep) {
  const Cdf a = StepCdf({{0.0, 1.0}});
  const Cdf b = StepCdf({{0.0, 1.0}, {1.0, 1.0}});
  EXPECT_DOUBLE_EQ(ks_distance(a, b), 0.5);
  EXPECT_DOUBLE_EQ(ks_distance(a, a), 0.0);
}

TEST(Levy, IdenticalIsZero) {
  const Cdf f = StepCdf({{0.0, 1.0}, {1.0, 3.0}});
  EXPECT_LE(levy_metric(f, f), 1e-6);
  EXPECT_LE(levy_metric(StandardNormalCdf{}, StandardNormalCdf{}), 1e-6);
}

TEST(Levy, ShiftedPointMasses) {
  // Corridor definition: the shift needed is the full offset, capped at 1.
  EXPECT_NEAR(levy_metric(StepCdf({{0.0, 1.0}}), StepCdf({{0.2, 1.0}})), 0.2, 1e-6);
  EXPECT_NEAR(levy_metric(StepCdf({{0.0, 1.0}}), StepCdf({{0.7, 1.0}})), 0.7, 1e-6);
  EXPECT_NEAR(levy_metric(StepCdf({{0.0, 1.0}}), StepCdf({{5.0, 1.0}})), 1.0, 1e-6);
}

TEST(Levy, TwoPointAgainstOneCorner) {
  // F jumps 1/2 at 0 and 1/2 at 1, G jumps 1 at 0: the corridor needs
  // eps = 1/2 (vertical), since a horizontal shift would need 1.
  EXPECT_NEAR(levy_metric(StepCdf({{0.0, 1.0}, {1.0, 1.0}}), StepCdf({{0.0, 1.0}})), 0.5, 1e-6);
}

TEST(Levy, AgainstBruteForceForNormal) {
  std::mt19937_64 gen(53);
  for (int trial = 0; trial < 6; ++trial) {
    const auto f = random_step(gen);
    EXPECT_NEAR(levy_metric(f, StandardNormalCdf{}), brute_levy(f), 2e-4) << trial;
  }
  const StepCdf coin({{-1.0, 1.0}, {1.0, 1.0}});
  EXPECT_NEAR(levy_metric(coin, StandardNormalCdf{}), brute_levy(coin), 2e-4);
}

TEST(LevyProperty, SymmetricAndBelowKs) {
  std::mt19937_64 gen(54);
  for (int trial = 0; trial < 50; ++trial) {
    const Cdf f = random_step(gen);
    const Cdf g = (trial % 2) ? Cdf(random_step(gen)) : Cdf(StandardNormalCdf{});
    const double fg = levy_metric(f, g), gf = levy_metric(g, f);
    ASSERT_NEAR(fg, gf, 1e-4);
    ASSERT_LE(fg, ks_distance(f, g) + 1e-6);
    ASSERT_GE(fg, 0.0);
  }
}

TEST(NormalityReport, Preconditions) {
  EXPECT_THROW(normality_report(SumLaw{0, {1.0}}), SepError);
  EXPECT_THROW(normality_report(summarize(std::vector<long>(50, 1), 0, 1.0)), SepError);
  std::vector<long> s;
  for (int i = 0; i < 400; ++i) s.push_back(i % 4);
  const auto r = normality_report(summarize(s, 0, 1.0));
  EXPECT_EQ(r.n_samples, 400u);
  EXPECT_GT(r.ks_stderr, 0.0);
  EXPECT_FALSE(r.esseen_rate.has_value());
}

TEST(NormalityReport, DeterministicForExactLaws) {
  const SumLaw law{-3, bernoulli_convolution({0.2, 0.5, 0.7, 0.9})};
  const auto a = normality_report(law), b = normality_report(law);
  EXPECT_EQ(a.ks_distance, b.ks_distance);
  EXPECT_EQ(a.levy_distance, b.levy_distance);
  const nlohmann::json j = a;
  for (const char* key : {"ks_distance", "levy_distance", "esseen_rate", "variance"}) {
    EXPECT_TRUE(j.contains(key));
  }
}

TEST(NormalityProperty, BerryEsseenOnExactSepLaws) {
  for (std::size_t n : {4, 6, 8, 10}) {
    const auto w = SiteWindow::centered(n);
    const auto part = Partition::split_at(w);
    for (const auto& k : {make_nearest_neighbor(w, 1.0), make_heavy_tail(w, 1.5),
                          make_random_environment(w, 2, 0.2)}) {
      for (double t : {0.1, 1.0, 5.0}) {
        const auto law = current_law(full_law(k, step_configuration(w, part), t), part);
        const auto dec = bernoulli_decompose(genpoly_from_sumlaw(law));
        const double rate = esseen_rate(dec);
        const auto r = normality_report(law, rate);
        ASSERT_LE(r.ks_distance, kEsseenConstant * rate + 1e-6);
        ASSERT_LE(r.levy_distance, r.ks_distance + 1e-6);
      }
    }
  }
}

TEST(GrowthFit, PowerLaws) {
  const std::vector<double> t{1, 2, 4, 8, 16};
  std::vector<double> lin, root;
  for (double x : t) lin.push_back(x), root.push_back(std::sqrt(x));
  EXPECT_NEAR(growth_fit(t, lin).log_log_slope, 1.0, 1e-12);
  const auto g = growth_fit(t, root);
  EXPECT_NEAR(g.log_log_slope, 0.5, 1e-12);
  EXPECT_NEAR(g.slope_stderr, 0.0, 1e-12);
  EXPECT_NEAR(g.residual_rms, 0.0, 1e-12);
}

TEST(GrowthFit, Preconditions) {
  EXPECT_THROW(growth_fit({1, 2, 3}, {1, 2, 3}), SepError);
  EXPECT_THROW(growth_fit({1, 2, 3, 4}, {1, 0, 3, 4}), SepError);
  EXPECT_THROW(growth_fit({1, 2, 2, 4}, {1, 2, 3, 4}), SepError);
}

TEST(RateRegression, ExactEnvelope) {
  std::vector<double> v{1, 2, 4, 8, 16}, d;
  for (double x : v) d.push_back(0.3 / std::sqrt(x));
  const auto fit = rate_regression(d, v);
  EXPECT_NEAR(fit.fitted_c, 0.3, 1e-12);
  EXPECT_NEAR(fit.slope, -0.5, 1e-12);
  EXPECT_TRUE(fit.ok);
}

TEST(RateRegression, FlatDistancesFail) {
  const auto fit = rate_regression({0.1, 0.1, 0.1, 0.1, 0.1}, {1, 2, 4, 8, 16});
  EXPECT_FALSE(fit.ok);
  EXPECT_THROW(rate_regression({0.1, 0.1, 0.1, 0.1}, {1, 1, 1, 1}), SepError);
  EXPECT_THROW(rate_regression({0.1, 0.1}, {1, 2}), SepError);
}

TEST(TotalVariation, Offsets) {
  EXPECT_DOUBLE_EQ(total_variation(0, {0.5, 0.5}, 1, {0.5, 0.5}), 0.5);
  EXPECT_DOUBLE_EQ(total_variation(-1, {0.25, 0.75}, -1, {0.25, 0.75}), 0.0);
  EXPECT_DOUBLE_EQ(total_variation(0, {1.0}, 5, {1.0}), 1.0);
}

TEST(ReportsCsv, Header) {
  NormalityReport r;
  r.variance = 2.0;
  r.ks_distance = 0.1;
  r.levy_distance = 0.05;
  std::ostringstream os;
  write_reports_csv(os, {{4.0, r}});
  EXPECT_EQ(os.str(), "t,var,ks,levy,esseen_rate\n4,2,0.1,0.05,\n");
}
