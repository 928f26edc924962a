#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sep {

class RateKernel;

enum class Execution { serial, parallel };

/// Generator of a finite conservative CTMC stored as off-diagonal rates in
/// CSR form; the diagonal is minus the row sum. All generators built in this
/// library are symmetric.
class SparseGenerator {
 public:
  SparseGenerator() = default;
  /// `rows[i]` lists (column, rate) for the off-diagonal entries of row i.
  explicit SparseGenerator(const std::vector<std::vector<std::pair<std::size_t, double>>>& rows);

  std::size_t size() const { return exit_.size(); }
  std::size_t nonzeros() const { return cols_.size(); }
  double exit_rate(std::size_t i) const { return exit_[i]; }
  double max_exit_rate() const { return max_exit_; }

  /// y = (I + Q/lambda) x for a block of `width` column vectors stored
  /// row-major (x[i*width + c]).
  void uniformized_apply(std::span<const double> x, std::span<double> y, std::size_t width,
                         double lambda, Execution exec) const;

  /// y = Q x, single vector.
  void apply(std::span<const double> x, std::span<double> y) const;

 private:
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> rates_;
  std::vector<double> exit_;
  double max_exit_ = 0.0;
};

SparseGenerator one_particle_generator(const RateKernel& kernel);

struct Propagated {
  std::vector<double> values;
  /// Bound on the dropped Poisson mass; multiply by max|x| for the absolute
  /// error of each entry.
  double accuracy = 0.0;
};

/// exp(tQ) applied to a block of `width` column vectors by uniformization.
/// Long horizons are split into steps with lambda*dt <= 40 so the Poisson
/// weights never underflow; the truncation budget `tol` is shared between
/// steps.
Propagated propagate(const SparseGenerator& gen, double t, std::span<const double> x,
                     std::size_t width, double tol, Execution exec = Execution::parallel);

inline Propagated propagate(const SparseGenerator& gen, double t, std::span<const double> x,
                            double tol, Execution exec = Execution::parallel) {
  return propagate(gen, t, x, 1, tol, exec);
}

}  // namespace sep
