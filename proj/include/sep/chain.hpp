#pragma once

#include <iosfwd>
#include <vector>

#include "sep/generator.hpp"
#include "sep/kernel.hpp"

namespace sep {

/// Transition probabilities of the one-particle chain X_t at a fixed time.
struct SemigroupTable {
  SiteWindow window;
  double time = 0.0;
  std::vector<double> probs;  // row-major, probs[x*n + y] = P^x(X_t = y)
  double accuracy = 0.0;

  std::size_t size() const { return window.size(); }
  double at(std::size_t x, std::size_t y) const { return probs[x * size() + y]; }
};

constexpr double kDefaultSemigroupTol = 1e-10;

SemigroupTable semigroup(const RateKernel& kernel, double t, double tol = kDefaultSemigroupTol);

/// E^eta eta_t(x) = E^x eta(X_t), read off a precomputed table.
double occupation_mean(const SemigroupTable& table, const Configuration& eta, Site x);

/// Vector of E^x eta(X_t) over all window positions.
std::vector<double> occupation_means(const RateKernel& kernel, const Configuration& eta, double t,
                                     double tol = kDefaultSemigroupTol);

/// {t0, 2 t0, 4 t0, ...}, `count` points.
std::vector<double> geometric_grid(double t0, std::size_t count);

struct BalanceProfile {
  std::vector<double> t_grid;
  std::vector<std::vector<double>> values;  // values[x][k] = P^x(X_{t_k} in A)
  double min_at_last() const;
  double max_at_last() const;
};

BalanceProfile balance_profile(const RateKernel& kernel, const Partition& partition,
                               const std::vector<double>& t_grid, double tol = kDefaultSemigroupTol);

/// sum over occupied x of (1 - E^x eta(X_t)) at each grid time.
std::vector<double> rigidity_profile(const RateKernel& kernel, const Configuration& eta,
                                     const std::vector<double>& t_grid,
                                     double tol = kDefaultSemigroupTol);

/// True when the last step of the profile still increases by more than
/// `rel` relative to the previous value.
bool still_growing(const std::vector<double>& profile, double rel = 1e-3);

/// E W_t = sum_{x in B} (E^x eta(X_t) - eta(x)).
double expected_current(const RateKernel& kernel, const Configuration& eta,
                        const Partition& partition, double t, double tol = kDefaultSemigroupTol);

std::vector<double> expected_current_profile(const RateKernel& kernel, const Configuration& eta,
                                             const Partition& partition,
                                             const std::vector<double>& t_grid,
                                             double tol = kDefaultSemigroupTol);

/// CSV rows "row_site,col_site,probability", zero entries skipped.
void write_csv(std::ostream& os, const SemigroupTable& table);

}  // namespace sep
