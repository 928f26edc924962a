#include "sep/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace sep {

namespace {

double value_at(const Cdf& cdf, double x) {
  return std::visit([x](const auto& f) { return f(x); }, cdf);
}

double left_at(const Cdf& cdf, double x) {
  return std::visit([x](const auto& f) { return f.left_limit(x); }, cdf);
}

const std::vector<double>* breakpoints_of(const Cdf& cdf) {
  if (const auto* step = std::get_if<StepCdf>(&cdf)) return &step->breakpoints();
  return nullptr;
}

std::vector<double> continuous_grid() {
  std::vector<double> grid;
  for (double x = -10.0; x <= 10.0; x += 1e-3) grid.push_back(x);
  return grid;
}

/// sup_x [F(x - eps) - G(x)] <= eps, i.e. the lower half of the corridor.
bool lower_corridor(const Cdf& f, const Cdf& g, double eps) {
  const auto* fb = breakpoints_of(f);
  const auto* gb = breakpoints_of(g);
  // h(x) = F(x - eps) - G(x) is monotone between the candidate points, so its
  // supremum is a value or a left limit at one of them.
  // F is evaluated at xf, G at xg = xf + eps; both are passed so that a
  // breakpoint is never lost to rounding in (b + eps) - eps.
  auto violates_at = [&](double xf, double xg) {
    return value_at(f, xf) - value_at(g, xg) > eps || left_at(f, xf) - left_at(g, xg) > eps;
  };
  if (fb) {
    for (double b : *fb) {
      if (violates_at(b, b + eps)) return false;
    }
  }
  if (gb) {
    for (double c : *gb) {
      if (violates_at(c - eps, c)) return false;
    }
  }
  if (!fb && !gb) {
    for (double x : continuous_grid()) {
      if (value_at(f, x - eps) - value_at(g, x) > eps) return false;
    }
  }
  return true;
}

struct Atoms {
  std::vector<std::pair<double, double>> points;  // (value, mass), sorted
  double mean = 0.0;
  double variance = 0.0;
};

NormalityReport report_from_atoms(const Atoms& atoms, std::size_t n_samples) {
  if (!(atoms.variance > 0.0)) throw SepError("zero variance: normality report undefined");
  const double sd = std::sqrt(atoms.variance);
  std::vector<std::pair<double, double>> normalized;
  for (const auto& [v, m] : atoms.points) normalized.emplace_back((v - atoms.mean) / sd, m);
  const Cdf empirical = StepCdf(normalized);
  const Cdf normal = StandardNormalCdf{};

  NormalityReport r;
  r.n_samples = n_samples;
  r.mean = atoms.mean;
  r.variance = atoms.variance;
  r.ks_distance = ks_distance(empirical, normal);
  r.levy_distance = levy_metric(empirical, normal);

  // Continuity-corrected comparison at the half-integers between atoms, and
  // the binomial standard error of the empirical CDF at the KS argmax.
  const auto& step = std::get<StepCdf>(empirical);
  double cum = 0.0;
  double worst = 0.0;
  for (const auto& [v, m] : atoms.points) {
    cum += m;
    const double d = std::abs(cum - normal_cdf((v + 0.5 - atoms.mean) / sd));
    worst = std::max(worst, d);
    if (std::abs(normal_cdf((v - 0.5 - atoms.mean) / sd) - (cum - m)) > worst) {
      worst = std::abs(normal_cdf((v - 0.5 - atoms.mean) / sd) - (cum - m));
    }
  }
  r.midpoint_ks_distance = worst;
  if (n_samples > 0) {
    double best = -1.0, f_at = 0.5;
    for (double b : step.breakpoints()) {
      for (double fv : {step(b), step.left_limit(b)}) {
        const double d = std::abs(fv - normal_cdf(b));
        if (d > best) best = d, f_at = fv;
      }
    }
    r.ks_stderr = std::sqrt(std::max(f_at * (1.0 - f_at), 1e-12) / static_cast<double>(n_samples));
  }
  return r;
}

}  // namespace

double normal_cdf(double x) {
  constexpr double p = 0.2316419;
  constexpr double b1 = 0.319381530, b2 = -0.356563782, b3 = 1.781477937, b4 = -1.821255978,
                   b5 = 1.330274429;
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  const double ax = std::abs(x);
  const double t = 1.0 / (1.0 + p * ax);
  const double poly = t * (b1 + t * (b2 + t * (b3 + t * (b4 + t * b5))));
  const double upper = inv_sqrt_2pi * std::exp(-0.5 * ax * ax) * poly;
  return x >= 0.0 ? 1.0 - upper : upper;
}

StepCdf::StepCdf(std::vector<std::pair<double, double>> atoms) {
  std::sort(atoms.begin(), atoms.end());
  double total = 0.0;
  for (const auto& a : atoms) total += a.second;
  if (!(total > 0.0)) throw SepError("step CDF needs positive mass");
  double cum = 0.0;
  for (const auto& [x, m] : atoms) {
    cum += m / total;
    if (!points_.empty() && points_.back() == x) {
      cumulative_.back() = cum;
    } else {
      points_.push_back(x);
      cumulative_.push_back(cum);
    }
  }
  cumulative_.back() = 1.0;
}

double StepCdf::operator()(double x) const {
  const auto it = std::upper_bound(points_.begin(), points_.end(), x);
  return it == points_.begin() ? 0.0 : cumulative_[static_cast<std::size_t>(it - points_.begin()) - 1];
}

double StepCdf::left_limit(double x) const {
  const auto it = std::lower_bound(points_.begin(), points_.end(), x);
  return it == points_.begin() ? 0.0 : cumulative_[static_cast<std::size_t>(it - points_.begin()) - 1];
}

double ks_distance(const Cdf& f, const Cdf& g) {
  const auto* fb = breakpoints_of(f);
  const auto* gb = breakpoints_of(g);
  if (!fb && !gb) return 0.0;  // both are the standard normal
  double d = 0.0;
  for (const auto* bps : {fb, gb}) {
    if (!bps) continue;
    for (double x : *bps) {
      d = std::max(d, std::abs(value_at(f, x) - value_at(g, x)));
      d = std::max(d, std::abs(left_at(f, x) - left_at(g, x)));
    }
  }
  return std::min(d, 1.0);
}

double levy_metric(const Cdf& f, const Cdf& g) {
  auto fits = [&](double eps) { return lower_corridor(f, g, eps) && lower_corridor(g, f, eps); };
  double lo = 0.0, hi = 1.0;
  if (fits(0.0)) return 0.0;
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    (fits(mid) ? hi : lo) = mid;
  }
  return hi;
}

NormalityReport normality_report(const ReplicaSummary& summary) {
  if (summary.n_replicas < 100) throw SepError("normality report needs at least 100 samples");
  Atoms atoms;
  for (const auto& [w, c] : summary.histogram) {
    atoms.points.emplace_back(static_cast<double>(w), static_cast<double>(c) / static_cast<double>(summary.n_replicas));
  }
  atoms.mean = summary.mean;
  atoms.variance = summary.variance;
  return report_from_atoms(atoms, summary.n_replicas);
}

NormalityReport normality_report(const SumLaw& law, std::optional<double> esseen_rate) {
  Atoms atoms;
  for (std::size_t k = 0; k < law.pmf.size(); ++k) {
    if (law.pmf[k] > 0.0) {
      atoms.points.emplace_back(static_cast<double>(k) + static_cast<double>(law.support_offset), law.pmf[k]);
    }
  }
  atoms.mean = law.mean();
  atoms.variance = law.variance();
  auto r = report_from_atoms(atoms, 0);
  r.esseen_rate = esseen_rate;
  return r;
}

void to_json(nlohmann::json& j, const NormalityReport& report) {
  j = nlohmann::json{{"n_samples", report.n_samples},
                     {"mean", report.mean},
                     {"variance", report.variance},
                     {"ks_distance", report.ks_distance},
                     {"ks_stderr", report.ks_stderr},
                     {"levy_distance", report.levy_distance},
                     {"midpoint_ks_distance", report.midpoint_ks_distance}};
  j["esseen_rate"] = report.esseen_rate ? nlohmann::json(*report.esseen_rate) : nlohmann::json(nullptr);
}

GrowthFit growth_fit(const std::vector<double>& t_grid, const std::vector<double>& values) {
  if (t_grid.size() != values.size()) throw SepError("growth fit needs one value per time");
  if (t_grid.size() < 4) throw SepError("growth fit needs at least 4 points");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!(t_grid[k] > 0.0)) throw SepError("growth fit needs positive times");
    if (k > 0 && !(t_grid[k] > t_grid[k - 1])) throw SepError("growth fit needs a strictly increasing grid");
    if (!(values[k] > 0.0)) throw SepError("growth fit needs positive values");
  }
  const auto n = static_cast<double>(t_grid.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    mx += std::log(t_grid[k]);
    my += std::log(values[k]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double dx = std::log(t_grid[k]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(values[k]) - my);
  }
  GrowthFit fit{t_grid, values};
  fit.log_log_slope = sxy / sxx;
  fit.intercept = my - fit.log_log_slope * mx;
  double rss = 0.0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double r = std::log(values[k]) - fit.intercept - fit.log_log_slope * std::log(t_grid[k]);
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / n);
  fit.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

RateFit rate_regression(const std::vector<double>& distances, const std::vector<double>& variances) {
  if (distances.size() != variances.size() || distances.size() < 4) {
    throw SepError("rate regression needs at least 4 (distance, variance) points");
  }
  const auto [vmin, vmax] = std::minmax_element(variances.begin(), variances.end());
  if (!(*vmin > 0.0) || !(*vmax > *vmin)) throw SepError("degenerate variance sequence");

  RateFit fit;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < distances.size(); ++k) {
    const double u = 1.0 / std::sqrt(variances[k]);
    num += distances[k] * u;
    den += u * u;
  }
  fit.fitted_c = num / den;

  // Slope of log d against log v; growth_fit wants increasing abscissae.
  std::vector<std::size_t> order(variances.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return variances[a] < variances[b]; });
  std::vector<double> v, d;
  for (auto k : order) {
    if (!v.empty() && variances[k] <= v.back()) continue;
    v.push_back(variances[k]);
    d.push_back(std::max(distances[k], 1e-300));
  }
  if (v.size() < 3) throw SepError("degenerate variance sequence");
  if (v.size() == 3) {
    // growth_fit needs 4 points; fall back to the two-point slope.
    fit.slope = std::log(d.back() / d.front()) / std::log(v.back() / v.front());
  } else {
    const auto g = growth_fit(v, d);
    fit.slope = g.log_log_slope;
    fit.slope_stderr = g.slope_stderr;
  }
  fit.ok = fit.slope <= -0.5 + 2.0 * fit.slope_stderr + 1e-9;
  return fit;
}

RateFit rate_regression(const std::vector<std::pair<double, NormalityReport>>& reports) {
  std::vector<double> d, v;
  for (const auto& [t, r] : reports) {
    d.push_back(r.levy_distance);
    v.push_back(r.variance);
  }
  return rate_regression(d, v);
}

double total_variation(long offset_a, const std::vector<double>& a, long offset_b,
                       const std::vector<double>& b) {
  const long lo = std::min(offset_a, offset_b);
  const long hi = std::max(offset_a + static_cast<long>(a.size()), offset_b + static_cast<long>(b.size()));
  double tv = 0.0;
  for (long v = lo; v < hi; ++v) {
    const long ia = v - offset_a, ib = v - offset_b;
    const double pa = ia >= 0 && ia < static_cast<long>(a.size()) ? a[static_cast<std::size_t>(ia)] : 0.0;
    const double pb = ib >= 0 && ib < static_cast<long>(b.size()) ? b[static_cast<std::size_t>(ib)] : 0.0;
    tv += std::abs(pa - pb);
  }
  return 0.5 * tv;
}

void write_reports_csv(std::ostream& os,
                       const std::vector<std::pair<double, NormalityReport>>& reports) {
  os << "t,var,ks,levy,esseen_rate\n";
  os.precision(10);
  for (const auto& [t, r] : reports) {
    os << t << ',' << r.variance << ',' << r.ks_distance << ',' << r.levy_distance << ',';
    if (r.esseen_rate) os << *r.esseen_rate;
    os << '\n';
  }
}

}  // namespace sep
