#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "sep/chain.hpp"
#include "sep/kernel.hpp"

namespace sep {

enum class PairKind { independent, exclusion };

/// Indexing of the two-particle state space: all ordered pairs for the
/// independent chain, ordered pairs with x != y for the exclusion chain.
class PairSpace {
 public:
  PairSpace(std::size_t sites, PairKind kind);

  std::size_t sites() const { return sites_; }
  PairKind kind() const { return kind_; }
  std::size_t size() const { return pairs_.size(); }
  /// Throws for x == y on the exclusion space.
  std::size_t index(std::size_t x, std::size_t y) const;
  std::pair<std::size_t, std::size_t> pair(std::size_t k) const { return pairs_[k]; }

 private:
  std::size_t sites_;
  PairKind kind_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  std::vector<std::size_t> lookup_;
};

SparseGenerator pair_generator(const RateKernel& kernel, const PairSpace& space);

struct PairTable {
  PairSpace space;
  double time = 0.0;
  std::vector<double> probs;  // row-major over space.size()^2
  double accuracy = 0.0;

  double at(std::size_t from, std::size_t to) const { return probs[from * space.size() + to]; }
  double at(std::size_t x, std::size_t y, std::size_t u, std::size_t v) const {
    return at(space.index(x, y), space.index(u, v));
  }
};

PairTable pair_semigroup(const RateKernel& kernel, double t, PairKind kind,
                         double tol = kDefaultSemigroupTol);

/// Applies the two-particle semigroup to a function f on pairs, given as
/// f(x,y) = g(x) g(y) for a site function g. Returns values indexed by space.
std::vector<double> pair_apply_product(const RateKernel& kernel, PairKind kind, double t,
                                       const std::vector<double>& g, double tol);

/// Cov(eta_t(x), eta_t(y)) under P^eta, x != y (site labels).
double cov_exact(const RateKernel& kernel, const Configuration& eta, double t, Site x, Site y,
                 double tol = kDefaultSemigroupTol);

/// Full covariance matrix of eta_t (row-major, window positions); the
/// diagonal holds the variances.
std::vector<double> covariance_matrix(const RateKernel& kernel, const Configuration& eta, double t,
                                      double tol = kDefaultSemigroupTol);

struct IdentityCheck {
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double quad_error = 0.0;
  double abs_err() const { return std::abs(lhs - rhs); }
};
void to_json(nlohmann::json& j, const IdentityCheck& check);

/// Integral of f over [a,b] by adaptive Simpson to absolute tolerance `tol`.
/// Throws SepError carrying the achieved estimate when the depth limit is hit
/// first. `error` receives the accumulated error estimate.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        double* error = nullptr, int max_depth = 40);

/// Dirichlet-form integrand sum_{x != y} p(x,y) [m_s(y) - m_s(x)]^2, with
/// m_s = E^. eta(X_s).
double variance_integrand(const RateKernel& kernel, const Configuration& eta, double s,
                          double tol = kDefaultSemigroupTol);

/// lhs = sum_x Var(eta_t(x)) from duality, rhs = time integral of
/// variance_integrand.
IdentityCheck variance_identity(const RateKernel& kernel, const Configuration& eta, double t,
                                double quad_tol = 1e-8, double tol = 1e-12);

double variance_current_exact(const RateKernel& kernel, const Configuration& eta,
                              const Partition& partition, double t,
                              double tol = kDefaultSemigroupTol);

/// Integrand of the lower bound 4 Var W_t >= int_0^t (...) ds at time s.
double lower_bound_integrand(const RateKernel& kernel, const Configuration& eta,
                             const Partition& partition, double s, double t,
                             double tol = kDefaultSemigroupTol);

/// int_0^t lower_bound_integrand ds.
double lower_bound(const RateKernel& kernel, const Configuration& eta, const Partition& partition,
                   double t, double quad_tol = 1e-8, double tol = 1e-12);

constexpr std::size_t kDefaultFullLawSites = 12;

/// Law of eta_t on all 2^n occupation states; bit i of a state is the
/// occupation of window position i.
struct FullLaw {
  SiteWindow window;
  double time = 0.0;
  std::vector<double> law;
  Configuration initial;
  double accuracy = 0.0;

  std::size_t sites() const { return window.size(); }
  static std::uint32_t mask_of(const Configuration& eta);
  /// P(eta_t = 1 on every position in mask).
  double prob_all_occupied(std::uint32_t mask) const;
  double marginal(std::size_t index) const;
  std::uint32_t mask_of_sites(const std::vector<Site>& sites) const;
};

SparseGenerator full_generator(const RateKernel& kernel);

FullLaw full_law(const RateKernel& kernel, const Configuration& eta, double t,
                 std::size_t n_max = kDefaultFullLawSites, double tol = kDefaultSemigroupTol);

/// Law of an integer statistic: pmf[k] = P(value = k + support_offset).
struct SumLaw {
  long support_offset = 0;
  std::vector<double> pmf;

  double mean() const;
  double variance() const;
  double total() const;
};
void to_json(nlohmann::json& j, const SumLaw& law);

/// Law of W_t = sum_{x in B} (eta_t(x) - eta(x)); support_offset is
/// -sum_{x in B} eta(x) so that pmf indices count particles in B.
SumLaw current_law(const FullLaw& full, const Partition& partition);

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds(double slack) const { return lhs <= rhs + slack; }
};

/// P(eta_t = 1 on A u B) against P(eta_t = 1 on A) P(eta_t = 1 on B).
InequalityCheck andjel_check(const FullLaw& full, const std::vector<Site>& set_a,
                             const std::vector<Site>& set_b);

}  // namespace sep
