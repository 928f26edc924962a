#pragma once

#include <complex>
#include <vector>

#include <json.hpp>

#include "sep/exact.hpp"

namespace sep {

/// Probability generating polynomial Q(z) = sum_k c_k z^k of a count.
struct GenPoly {
  std::vector<double> coeffs;

  std::size_t degree() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
  double operator()(double z) const;
};

/// Normalizes numerical dust (entries >= -1e-12 are clamped to 0) and checks
/// Q(1) = 1 within 1e-10.
GenPoly make_genpoly(std::vector<double> coeffs);

/// Coefficients are the pmf entries, i.e. the statistic is shifted by
/// -support_offset. With `allow_shift == false` a negative offset is an
/// error and a positive one becomes a factor z^offset.
GenPoly genpoly_from_sumlaw(const SumLaw& law, bool allow_shift = true);

constexpr double kDefaultTolIm = 1e-7;
constexpr double kNegligibleCoeff = 1e-14;
constexpr double kEsseenConstant = 0.5600;

struct RootCertificate {
  bool ok = false;
  double max_im = 0.0;      // max |Im root|
  double max_re = 0.0;      // max Re root (of the non-peeled roots)
  double root_scale = 1.0;  // max(1, max |root|)
  std::vector<std::complex<double>> roots;  // excludes peeled roots at 0
  std::size_t zero_roots = 0;               // peeled factors of z
  std::size_t dropped_degree = 0;           // negligible leading coefficients removed
  std::vector<std::string> warnings;
};

/// Roots of the companion matrix of the balanced, monic polynomial with
/// factors of z peeled first.
std::vector<std::complex<double>> polynomial_roots(const std::vector<double>& coeffs);

RootCertificate certify_real_rooted(const GenPoly& poly, double tol_im = kDefaultTolIm);

struct BernoulliDecomposition {
  std::vector<double> params;  // ascending
  std::vector<double> roots;   // a_k = 1 - 1/p_k, -inf never stored
  double residual = 0.0;       // max |coefficient error| of prod (p z + 1 - p)
  double mean = 0.0;           // sum p
  double variance = 0.0;       // sum p (1 - p)
};

/// Coefficients of prod_k (p_k z + 1 - p_k).
std::vector<double> bernoulli_convolution(const std::vector<double>& params);

BernoulliDecomposition bernoulli_decompose(const GenPoly& poly, double tol_im = kDefaultTolIm);

/// [sum p(1-p)]^(-1/2).
double esseen_rate(const BernoulliDecomposition& dec);

void to_json(nlohmann::json& j, const BernoulliDecomposition& dec);

/// Increasing indicator 1{sum_{x in sites} eta(x) >= threshold};
/// threshold 0 is the constant 1.
struct MonotoneIndicator {
  std::vector<Site> sites;
  std::size_t threshold = 1;
};

/// E[f g] against E[f] E[g] under the exact law; f and g must depend on
/// disjoint coordinates.
InequalityCheck negative_association_check(const FullLaw& full, const MonotoneIndicator& f,
                                           const MonotoneIndicator& g);

/// E r^{sum_T eta} against prod_{x in T} (1 + (r-1) E eta(x)).
InequalityCheck product_moment_check(const FullLaw& full, const std::vector<Site>& sites,
                                     double r = 2.0);

}  // namespace sep
