#include "sep/chain.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace sep {

namespace {

void require_nondecreasing(const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw SepError("time grid is empty");
  if (t_grid.front() < 0.0) throw SepError("time grid must be nonnegative");
  if (!std::is_sorted(t_grid.begin(), t_grid.end())) throw SepError("time grid must be nondecreasing");
}

void require_same_window(const RateKernel& kernel, std::size_t n) {
  if (kernel.size() != n) throw SepError("configuration length differs from window");
}

/// exp(t_k Q) f for every grid time, propagating from one grid point to the next.
std::vector<std::vector<double>> propagate_along(const RateKernel& kernel, std::vector<double> f,
                                                 const std::vector<double>& t_grid, double tol) {
  require_nondecreasing(t_grid);
  const auto gen = one_particle_generator(kernel);
  const double step_tol = tol / static_cast<double>(t_grid.size());
  std::vector<std::vector<double>> out;
  out.reserve(t_grid.size());
  double now = 0.0;
  for (double t : t_grid) {
    if (t > now) f = propagate(gen, t - now, f, step_tol).values;
    now = t;
    out.push_back(f);
  }
  return out;
}

}  // namespace

SemigroupTable semigroup(const RateKernel& kernel, double t, double tol) {
  if (!(tol > 0.0)) throw SepError("tolerance must be positive");
  const std::size_t n = kernel.size();
  std::vector<double> identity(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) identity[i * n + i] = 1.0;
  // exp(tQ) I computed column-block-wise; Q is symmetric so the result is the
  // row-stochastic table directly.
  auto result = propagate(one_particle_generator(kernel), t, identity, n, tol);
  return SemigroupTable{kernel.window(), t, std::move(result.values), result.accuracy};
}

double occupation_mean(const SemigroupTable& table, const Configuration& eta, Site x) {
  if (eta.size() != table.size()) throw SepError("configuration length differs from window");
  const std::size_t i = table.window.index_of(x);
  double m = 0.0;
  for (std::size_t y = 0; y < table.size(); ++y) m += table.at(i, y) * eta[y];
  return m;
}

std::vector<double> occupation_means(const RateKernel& kernel, const Configuration& eta, double t,
                                     double tol) {
  require_same_window(kernel, eta.size());
  return propagate(one_particle_generator(kernel), t, eta.as_vector(), tol).values;
}

std::vector<double> geometric_grid(double t0, std::size_t count) {
  if (!(t0 > 0.0) || count == 0) throw SepError("geometric grid needs t0 > 0 and count >= 1");
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = std::ldexp(t0, static_cast<int>(k));
  return grid;
}

double BalanceProfile::min_at_last() const {
  double m = 1.0;
  for (const auto& row : values) m = std::min(m, row.back());
  return m;
}

double BalanceProfile::max_at_last() const {
  double m = 0.0;
  for (const auto& row : values) m = std::max(m, row.back());
  return m;
}

BalanceProfile balance_profile(const RateKernel& kernel, const Partition& partition,
                               const std::vector<double>& t_grid, double tol) {
  require_same_window(kernel, partition.size());
  std::vector<double> in_a(kernel.size());
  for (std::size_t i = 0; i < in_a.size(); ++i) in_a[i] = partition.in_a(i) ? 1.0 : 0.0;

  const auto snapshots = propagate_along(kernel, in_a, t_grid, tol);
  BalanceProfile profile{t_grid, std::vector<std::vector<double>>(kernel.size())};
  for (std::size_t x = 0; x < kernel.size(); ++x) {
    for (const auto& snap : snapshots) profile.values[x].push_back(snap[x]);
  }
  return profile;
}

std::vector<double> rigidity_profile(const RateKernel& kernel, const Configuration& eta,
                                     const std::vector<double>& t_grid, double tol) {
  require_same_window(kernel, eta.size());
  if (eta.particles() == 0) throw SepError("rigidity undefined for vacuum");
  std::vector<double> out;
  for (const auto& means : propagate_along(kernel, eta.as_vector(), t_grid, tol)) {
    double r = 0.0;
    for (std::size_t x = 0; x < eta.size(); ++x) {
      if (eta[x] == 1) r += 1.0 - means[x];
    }
    out.push_back(std::max(0.0, r));
  }
  return out;
}

bool still_growing(const std::vector<double>& profile, double rel) {
  if (profile.size() < 2) return false;
  const double last = profile.back();
  const double prev = profile[profile.size() - 2];
  return last - prev > rel * std::max(std::abs(prev), 1e-300);
}

double expected_current(const RateKernel& kernel, const Configuration& eta,
                        const Partition& partition, double t, double tol) {
  return expected_current_profile(kernel, eta, partition, {t}, tol).front();
}

std::vector<double> expected_current_profile(const RateKernel& kernel, const Configuration& eta,
                                             const Partition& partition,
                                             const std::vector<double>& t_grid, double tol) {
  require_same_window(kernel, eta.size());
  require_same_window(kernel, partition.size());
  std::vector<double> out;
  for (const auto& means : propagate_along(kernel, eta.as_vector(), t_grid, tol)) {
    double w = 0.0;
    for (std::size_t x = 0; x < eta.size(); ++x) {
      if (partition.in_b(x)) w += means[x] - eta[x];
    }
    out.push_back(w);
  }
  return out;
}

void write_csv(std::ostream& os, const SemigroupTable& table) {
  os << "row_site,col_site,probability\n";
  os.precision(17);
  for (std::size_t x = 0; x < table.size(); ++x) {
    for (std::size_t y = 0; y < table.size(); ++y) {
      const double p = table.at(x, y);
      if (p == 0.0) continue;
      os << table.window.site(x) << ',' << table.window.site(y) << ',' << p << '\n';
    }
  }
}

}  // namespace sep
