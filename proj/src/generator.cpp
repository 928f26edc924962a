#include "sep/generator.hpp"

#include <algorithm>
#include <cmath>

#include "sep/kernel.hpp"

namespace sep {

namespace {

constexpr double kMaxStepMass = 40.0;
// Below this many multiply-adds per sweep a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;

}  // namespace

SparseGenerator::SparseGenerator(
    const std::vector<std::vector<std::pair<std::size_t, double>>>& rows)
    : exit_(rows.size(), 0.0) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [j, r] : rows[i]) {
      if (j == i || r <= 0.0) continue;
      cols_.push_back(j);
      rates_.push_back(r);
      exit_[i] += r;
    }
    row_ptr_.push_back(cols_.size());
  }
  if (!exit_.empty()) max_exit_ = *std::max_element(exit_.begin(), exit_.end());
}

void SparseGenerator::uniformized_apply(std::span<const double> x, std::span<double> y,
                                        std::size_t width, double lambda, Execution exec) const {
  const auto n = static_cast<std::ptrdiff_t>(size());
  const double inv = 1.0 / lambda;
  const bool go_parallel =
      exec == Execution::parallel && (nonzeros() + size()) * width >= kParallelWork;

  if (width == 1) {
#pragma omp parallel for schedule(static) if (go_parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const double xi = x[i];
      double acc = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        acc += rates_[k] * (x[cols_[k]] - xi);
      }
      y[i] = xi + acc * inv;
    }
    return;
  }

#pragma omp parallel for schedule(static) if (go_parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* xi = x.data() + i * width;
    double* yi = y.data() + i * width;
    std::copy(xi, xi + width, yi);
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const double w = rates_[k] * inv;
      const double* xj = x.data() + cols_[k] * width;
      for (std::size_t c = 0; c < width; ++c) yi[c] += w * (xj[c] - xi[c]);
    }
  }
}

void SparseGenerator::apply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += rates_[k] * (x[cols_[k]] - x[i]);
    y[i] = acc;
  }
}

SparseGenerator one_particle_generator(const RateKernel& kernel) {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(kernel.size());
  for (const auto& p : kernel.pairs()) {
    rows[p.i].emplace_back(p.j, p.rate);
    rows[p.j].emplace_back(p.i, p.rate);
  }
  return SparseGenerator(rows);
}

Propagated propagate(const SparseGenerator& gen, double t, std::span<const double> x,
                     std::size_t width, double tol, Execution exec) {
  if (!(tol > 0.0)) throw SepError("tolerance must be positive");
  if (!(t >= 0.0)) throw SepError("time must be nonnegative");
  if (x.size() != gen.size() * width) throw SepError("vector length differs from state space");

  Propagated out{{x.begin(), x.end()}, 0.0};
  const double lambda = gen.max_exit_rate();
  if (t == 0.0 || lambda == 0.0) return out;

  const double total_mass = lambda * t;
  const auto steps = static_cast<std::size_t>(std::ceil(total_mass / kMaxStepMass));
  const double mass = total_mass / static_cast<double>(steps);
  const double step_tol = tol / static_cast<double>(steps);
  const auto max_terms =
      static_cast<std::size_t>(mass + 20.0 * std::sqrt(mass) + 60.0);

  std::vector<double> term(x.size()), next(x.size()), acc(x.size());
  for (std::size_t s = 0; s < steps; ++s) {
    term = out.values;
    long double weight = std::exp(-static_cast<long double>(mass));
    long double cumulative = weight;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = static_cast<double>(weight) * term[i];

    for (std::size_t k = 1; k <= max_terms; ++k) {
      if (1.0L - cumulative <= step_tol && static_cast<double>(k) > mass) break;
      gen.uniformized_apply(term, next, width, lambda, exec);
      term.swap(next);
      weight *= static_cast<long double>(mass) / static_cast<long double>(k);
      cumulative += weight;
      const double w = static_cast<double>(weight);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * term[i];
    }
    out.values.swap(acc);
    out.accuracy += static_cast<double>(std::max(0.0L, 1.0L - cumulative));
  }
  return out;
}

}  // namespace sep
