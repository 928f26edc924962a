#pragma once

#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sep/exact.hpp"
#include "sep/stirring.hpp"

namespace sep {

/// Standard normal CDF, Abramowitz & Stegun 26.2.17 (|error| < 7.5e-8).
double normal_cdf(double x);

/// Right-continuous step CDF of a finite set of atoms.
class StepCdf {
 public:
  /// (location, mass) pairs; masses are normalized to sum to 1.
  explicit StepCdf(std::vector<std::pair<double, double>> atoms);

  double operator()(double x) const;
  double left_limit(double x) const;
  const std::vector<double>& breakpoints() const { return points_; }

 private:
  std::vector<double> points_;
  std::vector<double> cumulative_;
};

struct StandardNormalCdf {
  double operator()(double x) const { return normal_cdf(x); }
  double left_limit(double x) const { return normal_cdf(x); }
};

using Cdf = std::variant<StepCdf, StandardNormalCdf>;

/// sup_x |F(x) - G(x)|. At least one side must be a step function.
double ks_distance(const Cdf& f, const Cdf& g);

/// inf{eps : F(x-eps) - eps <= G(x) <= F(x+eps) + eps for all x}, by
/// bisection on eps; candidate x values are the breakpoints shifted by eps
/// (plus a fine grid when both sides are continuous). Accuracy 1e-6.
double levy_metric(const Cdf& f, const Cdf& g);

struct NormalityReport {
  std::size_t n_samples = 0;  // 0 for an exact law
  double mean = 0.0;
  double variance = 0.0;
  double ks_distance = 0.0;
  double levy_distance = 0.0;
  /// KS after comparing an integer-valued law with the normal at half-integer
  /// points (continuity correction); informational.
  double midpoint_ks_distance = 0.0;
  /// Monte Carlo standard error of ks_distance; 0 for exact laws.
  double ks_stderr = 0.0;
  std::optional<double> esseen_rate;
};

/// Normalizes atoms by their own mean and standard deviation and measures
/// the distance to N(0,1).
NormalityReport normality_report(const ReplicaSummary& summary);
NormalityReport normality_report(const SumLaw& law, std::optional<double> esseen_rate = {});

void to_json(nlohmann::json& j, const NormalityReport& report);

struct GrowthFit {
  std::vector<double> t_grid;
  std::vector<double> values;
  double log_log_slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

/// Least-squares slope of log(values) against log(t).
GrowthFit growth_fit(const std::vector<double>& t_grid, const std::vector<double>& values);

struct RateFit {
  double fitted_c = 0.0;      // least squares of d on v^(-1/2) through the origin
  double slope = 0.0;         // log-log slope of d against v
  double slope_stderr = 0.0;
  bool ok = false;            // slope <= -1/2 + 2 stderr
};

RateFit rate_regression(const std::vector<double>& distances, const std::vector<double>& variances);
RateFit rate_regression(const std::vector<std::pair<double, NormalityReport>>& reports);

/// Total-variation distance between two pmfs given with their offsets.
double total_variation(long offset_a, const std::vector<double>& a, long offset_b,
                       const std::vector<double>& b);

/// Flat "t,var,ks,levy,esseen_rate" table.
void write_reports_csv(std::ostream& os,
                       const std::vector<std::pair<double, NormalityReport>>& reports);

}  // namespace sep
