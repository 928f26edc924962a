#include "sep/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace sep {

namespace {

constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();
constexpr double kCovarianceTol = 1e-14;

void require_window(const RateKernel& kernel, std::size_t n, const char* what) {
  if (kernel.size() != n) throw SepError(std::string(what) + " length differs from window");
}

std::vector<double> indicator_of_a(const Partition& partition) {
  std::vector<double> f(partition.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = partition.in_a(i) ? 1.0 : 0.0;
  return f;
}

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth, double& error) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) {
    error += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  if (depth <= 0) {
    error += std::abs(delta) / 15.0;
    throw SepError("quadrature did not reach tolerance; achieved error estimate " +
                   std::to_string(error));
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, error) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, error);
}

}  // namespace

PairSpace::PairSpace(std::size_t sites, PairKind kind)
    : sites_(sites), kind_(kind), lookup_(sites * sites, kNoIndex) {
  for (std::size_t x = 0; x < sites; ++x) {
    for (std::size_t y = 0; y < sites; ++y) {
      if (kind == PairKind::exclusion && x == y) continue;
      lookup_[x * sites + y] = pairs_.size();
      pairs_.emplace_back(x, y);
    }
  }
}

std::size_t PairSpace::index(std::size_t x, std::size_t y) const {
  const std::size_t k = lookup_.at(x * sites_ + y);
  if (k == kNoIndex) throw SepError("pair (x,x) is not a state of the exclusion chain");
  return k;
}

SparseGenerator pair_generator(const RateKernel& kernel, const PairSpace& space) {
  const std::size_t n = kernel.size();
  // Neighbor lists of the one-particle kernel.
  std::vector<std::vector<std::pair<std::size_t, double>>> nbrs(n);
  for (const auto& p : kernel.pairs()) {
    nbrs[p.i].emplace_back(p.j, p.rate);
    nbrs[p.j].emplace_back(p.i, p.rate);
  }
  const bool exclusion = space.kind() == PairKind::exclusion;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(space.size());
  for (std::size_t k = 0; k < space.size(); ++k) {
    const auto [x, y] = space.pair(k);
    for (const auto& [z, r] : nbrs[x]) {
      // The bond between the two particles swaps their labels.
      rows[k].emplace_back(exclusion && z == y ? space.index(y, x) : space.index(z, y), r);
    }
    for (const auto& [z, r] : nbrs[y]) {
      if (exclusion && z == x) continue;
      rows[k].emplace_back(space.index(x, z), r);
    }
  }
  return SparseGenerator(rows);
}

PairTable pair_semigroup(const RateKernel& kernel, double t, PairKind kind, double tol) {
  if (kernel.size() < 2) throw SepError("pair chain needs at least 2 sites");
  PairSpace space(kernel.size(), kind);
  const std::size_t m = space.size();
  std::vector<double> identity(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) identity[i * m + i] = 1.0;
  auto result = propagate(pair_generator(kernel, space), t, identity, m, tol);
  return PairTable{std::move(space), t, std::move(result.values), result.accuracy};
}

std::vector<double> pair_apply_product(const RateKernel& kernel, PairKind kind, double t,
                                       const std::vector<double>& g, double tol) {
  require_window(kernel, g.size(), "site function");
  PairSpace space(kernel.size(), kind);
  std::vector<double> f(space.size());
  for (std::size_t k = 0; k < space.size(); ++k) {
    const auto [x, y] = space.pair(k);
    f[k] = g[x] * g[y];
  }
  return propagate(pair_generator(kernel, space), t, f, tol).values;
}

std::vector<double> covariance_matrix(const RateKernel& kernel, const Configuration& eta, double t,
                                      double tol) {
  require_window(kernel, eta.size(), "configuration");
  const std::size_t n = kernel.size();
  // Truncation errors in the joint and in the product of means do not
  // cancel, so work well below tol to keep near-zero covariances signed.
  const double inner = std::min(tol, kCovarianceTol);
  const auto means = occupation_means(kernel, eta, t, inner);
  const PairSpace space(n, PairKind::exclusion);
  const auto joint = pair_apply_product(kernel, PairKind::exclusion, t, eta.as_vector(), inner);

  std::vector<double> cov(n * n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      cov[x * n + y] = x == y ? means[x] * (1.0 - means[x])
                              : joint[space.index(x, y)] - means[x] * means[y];
    }
  }
  return cov;
}

double cov_exact(const RateKernel& kernel, const Configuration& eta, double t, Site x, Site y,
                 double tol) {
  if (x == y) throw SepError("use variance path");
  const auto& w = kernel.window();
  const std::size_t i = w.index_of(x);
  const std::size_t j = w.index_of(y);
  const double inner = std::min(tol, kCovarianceTol);
  const auto means = occupation_means(kernel, eta, t, inner);
  const PairSpace space(kernel.size(), PairKind::exclusion);
  const auto joint = pair_apply_product(kernel, PairKind::exclusion, t, eta.as_vector(), inner);
  return joint[space.index(i, j)] - means[i] * means[j];
}

void to_json(nlohmann::json& j, const IdentityCheck& check) {
  j = nlohmann::json{{"t", check.t},
                     {"lhs", check.lhs},
                     {"rhs", check.rhs},
                     {"abs_err", check.abs_err()},
                     {"quad_error", check.quad_error}};
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        double* error, int max_depth) {
  double err = 0.0;
  double value = 0.0;
  if (b > a) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    value = simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth, err);
  }
  if (error) *error = err;
  return value;
}

double variance_integrand(const RateKernel& kernel, const Configuration& eta, double s,
                          double tol) {
  const auto m = occupation_means(kernel, eta, s, tol);
  double sum = 0.0;
  for (const auto& p : kernel.pairs()) {
    const double d = m[p.j] - m[p.i];
    sum += p.rate * d * d;
  }
  return 2.0 * sum;  // ordered pairs
}

IdentityCheck variance_identity(const RateKernel& kernel, const Configuration& eta, double t,
                                double quad_tol, double tol) {
  require_window(kernel, eta.size(), "configuration");
  IdentityCheck check;
  check.t = t;
  if (eta.constant() || t == 0.0) return check;

  for (double m : occupation_means(kernel, eta, t, tol)) check.lhs += m * (1.0 - m);
  check.rhs = adaptive_simpson([&](double s) { return variance_integrand(kernel, eta, s, tol); },
                               0.0, t, quad_tol, &check.quad_error);
  return check;
}

double variance_current_exact(const RateKernel& kernel, const Configuration& eta,
                              const Partition& partition, double t, double tol) {
  require_window(kernel, partition.size(), "partition");
  if (t == 0.0) return 0.0;
  const std::size_t n = kernel.size();
  const auto cov = covariance_matrix(kernel, eta, t, tol);
  double four_var = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) four_var += partition.h(x) * partition.h(y) * cov[x * n + y];
  }
  return std::max(0.0, 0.25 * four_var);
}

double lower_bound_integrand(const RateKernel& kernel, const Configuration& eta,
                             const Partition& partition, double s, double t, double tol) {
  if (!(s >= 0.0 && s <= t)) throw SepError("integrand time must satisfy 0 <= s <= t");
  require_window(kernel, eta.size(), "configuration");
  require_window(kernel, partition.size(), "partition");
  const auto gen = one_particle_generator(kernel);
  const auto m = propagate(gen, s, eta.as_vector(), tol).values;
  const auto in_a = propagate(gen, t - s, indicator_of_a(partition), tol).values;
  double sum = 0.0;
  for (const auto& p : kernel.pairs()) {
    const double d = m[p.j] - m[p.i];
    const double q = 1.0 - (1.0 - 2.0 * in_a[p.i]) * (1.0 - 2.0 * in_a[p.j]);
    sum += p.rate * d * d * q;
  }
  return 2.0 * sum;
}

double lower_bound(const RateKernel& kernel, const Configuration& eta, const Partition& partition,
                   double t, double quad_tol, double tol) {
  return adaptive_simpson(
      [&](double s) { return lower_bound_integrand(kernel, eta, partition, s, t, tol); }, 0.0, t,
      quad_tol);
}

std::uint32_t FullLaw::mask_of(const Configuration& eta) {
  std::uint32_t mask = 0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta[i]) mask |= 1u << i;
  }
  return mask;
}

double FullLaw::prob_all_occupied(std::uint32_t mask) const {
  double p = 0.0;
  for (std::uint32_t s = 0; s < law.size(); ++s) {
    if ((s & mask) == mask) p += law[s];
  }
  return p;
}

double FullLaw::marginal(std::size_t index) const { return prob_all_occupied(1u << index); }

std::uint32_t FullLaw::mask_of_sites(const std::vector<Site>& sites) const {
  std::uint32_t mask = 0;
  for (Site x : sites) mask |= 1u << window.index_of(x);
  return mask;
}

SparseGenerator full_generator(const RateKernel& kernel) {
  const std::size_t n = kernel.size();
  const std::size_t states = std::size_t{1} << n;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(states);
  for (std::size_t s = 0; s < states; ++s) {
    for (const auto& p : kernel.pairs()) {
      const bool xi = (s >> p.i) & 1u;
      const bool xj = (s >> p.j) & 1u;
      if (xi != xj) rows[s].emplace_back(s ^ ((std::size_t{1} << p.i) | (std::size_t{1} << p.j)), p.rate);
    }
  }
  return SparseGenerator(rows);
}

FullLaw full_law(const RateKernel& kernel, const Configuration& eta, double t, std::size_t n_max,
                 double tol) {
  require_window(kernel, eta.size(), "configuration");
  if (kernel.size() > n_max || kernel.size() > 24) {
    throw SepError("window too large for full law (n_max = " + std::to_string(n_max) + ")");
  }
  std::vector<double> point(std::size_t{1} << kernel.size(), 0.0);
  point[FullLaw::mask_of(eta)] = 1.0;
  // The generator is symmetric, so exp(tQ) applied to the point mass is the
  // law at time t.
  auto result = propagate(full_generator(kernel), t, point, tol);
  return FullLaw{kernel.window(), t, std::move(result.values), eta, result.accuracy};
}

double SumLaw::total() const {
  double s = 0.0;
  for (double p : pmf) s += p;
  return s;
}

double SumLaw::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) m += pmf[k] * static_cast<double>(k);
  return m / total() + static_cast<double>(support_offset);
}

double SumLaw::variance() const {
  const double shifted = mean() - static_cast<double>(support_offset);
  double v = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    const double d = static_cast<double>(k) - shifted;
    v += pmf[k] * d * d;
  }
  return v / total();
}

void to_json(nlohmann::json& j, const SumLaw& law) {
  j = nlohmann::json{{"support_offset", law.support_offset},
                     {"pmf", law.pmf},
                     {"mean", law.mean()},
                     {"variance", law.variance()}};
}

SumLaw current_law(const FullLaw& full, const Partition& partition) {
  if (partition.size() != full.sites()) throw SepError("partition length differs from window");
  std::uint32_t b_mask = 0;
  for (std::size_t i = 0; i < partition.size(); ++i) {
    if (partition.in_b(i)) b_mask |= 1u << i;
  }
  const auto initial_in_b = std::popcount(FullLaw::mask_of(full.initial) & b_mask);
  SumLaw out;
  out.support_offset = -static_cast<long>(initial_in_b);
  out.pmf.assign(static_cast<std::size_t>(std::popcount(b_mask)) + 1, 0.0);
  for (std::uint32_t s = 0; s < full.law.size(); ++s) {
    out.pmf[static_cast<std::size_t>(std::popcount(s & b_mask))] += full.law[s];
  }
  return out;
}

InequalityCheck andjel_check(const FullLaw& full, const std::vector<Site>& set_a,
                             const std::vector<Site>& set_b) {
  if (set_a.empty() || set_b.empty()) throw SepError("andjel check needs nonempty sets");
  const auto a = full.mask_of_sites(set_a);
  const auto b = full.mask_of_sites(set_b);
  if (a & b) throw SepError("andjel check needs disjoint sets");
  return {full.prob_all_occupied(a | b), full.prob_all_occupied(a) * full.prob_all_occupied(b)};
}

}  // namespace sep
