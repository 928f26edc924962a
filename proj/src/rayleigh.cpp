#include "sep/rayleigh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <Eigen/Dense>

namespace sep {

namespace {

/// Parlett-Reinsch balancing with radix-2 scalings (exact in floating point).
void balance(Eigen::MatrixXd& a) {
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  const Eigen::Index n = a.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      double g = r / radix;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

using ComplexLD = std::complex<long double>;

std::pair<ComplexLD, ComplexLD> horner(const std::vector<double>& c, ComplexLD x) {
  ComplexLD p = 0.0L, dp = 0.0L;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    dp = dp * x + p;
    p = p * x + static_cast<long double>(*it);
  }
  return {p, dp};
}

/// Aberth-Ehrlich refinement of all roots at once, in extended precision.
/// The eigenvalue estimates are only accurate relative to the companion
/// norm, which loses small roots when the root moduli spread widely.
void refine_roots(const std::vector<double>& c, std::vector<std::complex<double>>& roots) {
  const std::size_t d = roots.size();
  std::vector<ComplexLD> z(roots.begin(), roots.end());
  // Coincident starting points make the Aberth sum singular.
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      if (z[k] == z[j]) z[k] += ComplexLD(0.0L, 1e-6L * (1.0L + std::abs(z[k])));
    }
  }
  for (int it = 0; it < 200; ++it) {
    long double worst = 0.0L;
    for (std::size_t k = 0; k < d; ++k) {
      const auto [p, dp] = horner(c, z[k]);
      if (p == ComplexLD(0.0L)) continue;
      const ComplexLD w = p / dp;
      ComplexLD sum = 0.0L;
      for (std::size_t j = 0; j < d; ++j) {
        if (j != k) sum += 1.0L / (z[k] - z[j]);
      }
      const ComplexLD step = w / (1.0L - w * sum);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) continue;
      z[k] -= step;
      worst = std::max(worst, std::abs(step) / (1.0L + std::abs(z[k])));
    }
    if (worst < 1e-18L) break;
  }
  for (std::size_t k = 0; k < d; ++k) {
    roots[k] = {static_cast<double>(z[k].real()), static_cast<double>(z[k].imag())};
  }
}

struct Reduced {
  std::vector<double> coeffs;  // trimmed at both ends
  std::size_t zero_roots = 0;
  std::size_t dropped = 0;
};

Reduced reduce(const std::vector<double>& coeffs) {
  Reduced r;
  std::size_t lo = 0;
  std::size_t hi = coeffs.size();
  while (hi > 0 && std::abs(coeffs[hi - 1]) < kNegligibleCoeff) --hi;
  while (lo < hi && std::abs(coeffs[lo]) < kNegligibleCoeff) ++lo;
  r.dropped = coeffs.size() - hi;
  r.zero_roots = lo;
  r.coeffs.assign(coeffs.begin() + static_cast<std::ptrdiff_t>(lo),
                  coeffs.begin() + static_cast<std::ptrdiff_t>(hi));
  return r;
}

}  // namespace

double GenPoly::operator()(double z) const {
  return static_cast<double>(horner(coeffs, ComplexLD(z)).first.real());
}

GenPoly make_genpoly(std::vector<double> coeffs) {
  if (coeffs.empty()) throw SepError("generating polynomial needs coefficients");
  double total = 0.0;
  for (auto& c : coeffs) {
    if (c < -1e-12) throw SepError("generating polynomial has a negative coefficient");
    c = std::max(c, 0.0);
    total += c;
  }
  if (std::abs(total - 1.0) > 1e-10) throw SepError("generating polynomial must satisfy Q(1) = 1");
  return GenPoly{std::move(coeffs)};
}

GenPoly genpoly_from_sumlaw(const SumLaw& law, bool allow_shift) {
  if (allow_shift) return make_genpoly(law.pmf);
  if (law.support_offset < 0) throw SepError("negative support without offset");
  std::vector<double> coeffs(static_cast<std::size_t>(law.support_offset), 0.0);
  coeffs.insert(coeffs.end(), law.pmf.begin(), law.pmf.end());
  return make_genpoly(std::move(coeffs));
}

std::vector<std::complex<double>> polynomial_roots(const std::vector<double>& coeffs) {
  const auto red = reduce(coeffs);
  std::vector<std::complex<double>> roots(red.zero_roots, 0.0);
  if (red.coeffs.size() < 2) return roots;

  const auto d = static_cast<Eigen::Index>(red.coeffs.size() - 1);
  const double lead = red.coeffs.back();
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    companion(0, k) = -red.coeffs[static_cast<std::size_t>(d - 1 - k)] / lead;
  }
  for (Eigen::Index k = 1; k < d; ++k) companion(k, k - 1) = 1.0;
  balance(companion);

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) throw SepError("companion eigenvalue solver failed");
  std::vector<std::complex<double>> nonzero(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) nonzero[static_cast<std::size_t>(k)] = solver.eigenvalues()(k);
  refine_roots(red.coeffs, nonzero);
  roots.insert(roots.end(), nonzero.begin(), nonzero.end());
  return roots;
}

RootCertificate certify_real_rooted(const GenPoly& poly, double tol_im) {
  if (poly.degree() < 1) throw SepError("real-rootedness needs degree >= 1");
  if (!(tol_im > 0.0)) throw SepError("tol_im must be positive");
  RootCertificate cert;
  const auto red = reduce(poly.coeffs);
  cert.zero_roots = red.zero_roots;
  cert.dropped_degree = red.dropped;
  if (red.dropped > 0) {
    cert.warnings.push_back("degree reduced by " + std::to_string(red.dropped) +
                            " (leading coefficients below 1e-14)");
  }
  auto all = polynomial_roots(poly.coeffs);
  cert.roots.assign(all.begin() + static_cast<std::ptrdiff_t>(red.zero_roots), all.end());

  cert.max_re = cert.roots.empty() ? 0.0 : -std::numeric_limits<double>::infinity();
  for (const auto& r : cert.roots) {
    cert.max_im = std::max(cert.max_im, std::abs(r.imag()));
    cert.max_re = std::max(cert.max_re, r.real());
    cert.root_scale = std::max(cert.root_scale, std::abs(r));
  }
  const double slack = tol_im * cert.root_scale;
  cert.ok = cert.max_im <= slack && cert.max_re <= slack;
  return cert;
}

std::vector<double> bernoulli_convolution(const std::vector<double>& params) {
  std::vector<double> c{1.0};
  for (double p : params) {
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      next[k] += (1.0 - p) * c[k];
      next[k + 1] += p * c[k];
    }
    c.swap(next);
  }
  return c;
}

BernoulliDecomposition bernoulli_decompose(const GenPoly& poly, double tol_im) {
  BernoulliDecomposition dec;
  if (poly.degree() >= 1) {
    const auto cert = certify_real_rooted(poly, tol_im);
    if (!cert.ok) {
      throw SepError("polynomial is not real-rooted with nonpositive roots (max |Im| = " +
                     std::to_string(cert.max_im) + ")");
    }
    for (const auto& r : cert.roots) {
      const double a = std::min(0.0, r.real());
      dec.roots.push_back(a);
      dec.params.push_back(1.0 / (1.0 - a));
    }
    dec.params.insert(dec.params.end(), cert.zero_roots, 1.0);
  }
  std::sort(dec.params.begin(), dec.params.end());
  std::sort(dec.roots.begin(), dec.roots.end());

  const auto rebuilt = bernoulli_convolution(dec.params);
  for (std::size_t k = 0; k < std::max(rebuilt.size(), poly.coeffs.size()); ++k) {
    const double want = k < poly.coeffs.size() ? poly.coeffs[k] : 0.0;
    const double got = k < rebuilt.size() ? rebuilt[k] : 0.0;
    dec.residual = std::max(dec.residual, std::abs(want - got));
  }
  for (double p : dec.params) {
    dec.mean += p;
    dec.variance += p * (1.0 - p);
  }
  return dec;
}

double esseen_rate(const BernoulliDecomposition& dec) {
  if (!(dec.variance > 0.0)) throw SepError("degenerate sum");
  return 1.0 / std::sqrt(dec.variance);
}

void to_json(nlohmann::json& j, const BernoulliDecomposition& dec) {
  j = nlohmann::json{{"roots", dec.roots},
                     {"params", dec.params},
                     {"residual", dec.residual},
                     {"mean", dec.mean},
                     {"variance", dec.variance}};
  if (dec.variance > 0.0) j["esseen_rate"] = esseen_rate(dec);
}

InequalityCheck negative_association_check(const FullLaw& full, const MonotoneIndicator& f,
                                           const MonotoneIndicator& g) {
  const auto fm = full.mask_of_sites(f.sites);
  const auto gm = full.mask_of_sites(g.sites);
  if (fm & gm) throw SepError("indicators must depend on disjoint coordinates");
  double ef = 0.0, eg = 0.0, efg = 0.0;
  for (std::uint32_t s = 0; s < full.law.size(); ++s) {
    const bool fv = static_cast<std::size_t>(std::popcount(s & fm)) >= f.threshold;
    const bool gv = static_cast<std::size_t>(std::popcount(s & gm)) >= g.threshold;
    if (fv) ef += full.law[s];
    if (gv) eg += full.law[s];
    if (fv && gv) efg += full.law[s];
  }
  return {efg, ef * eg};
}

InequalityCheck product_moment_check(const FullLaw& full, const std::vector<Site>& sites,
                                     double r) {
  const auto mask = full.mask_of_sites(sites);
  double lhs = 0.0;
  for (std::uint32_t s = 0; s < full.law.size(); ++s) lhs += full.law[s] * std::pow(r, std::popcount(s & mask));
  double rhs = 1.0;
  for (Site x : sites) rhs *= 1.0 + (r - 1.0) * full.marginal(full.window.index_of(x));
  return {lhs, rhs};
}

}  // namespace sep
