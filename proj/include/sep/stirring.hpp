#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include <json.hpp>

#include "sep/generator.hpp"
#include "sep/kernel.hpp"
#include "sep/rng.hpp"

namespace sep {

/// Walker/Vose alias table over a fixed weight vector; O(1) per draw.
class AliasTable {
 public:
  explicit AliasTable(const std::vector<double>& weights);

  std::size_t size() const { return prob_.size(); }
  /// Maps one uniform on [0,1) to an index: the integer part of u*n picks a
  /// column, the fractional part decides between it and its alias.
  std::size_t sample(double u) const {
    const double scaled = u * static_cast<double>(prob_.size());
    auto col = static_cast<std::size_t>(scaled);
    if (col >= prob_.size()) col = prob_.size() - 1;
    return scaled - static_cast<double>(col) < prob_[col] ? col : alias_[col];
  }
  /// Probability mass the table assigns to index k (for testing).
  double mass(std::size_t k) const;

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

constexpr double kDefaultEventBudget = 1e8;

struct StirringEvent {
  double time;
  std::size_t i;  // window positions, i < j
  std::size_t j;
};

struct StirringTrajectory {
  SiteWindow window;
  double horizon = 0.0;
  std::vector<StirringEvent> events;
  std::vector<std::size_t> final_labels;     // site position -> label occupying it (L_t)
  std::vector<std::size_t> final_positions;  // label -> site position (xi_t)
};

StirringTrajectory simulate(const RateKernel& kernel, double horizon, std::uint64_t seed,
                            double event_budget = kDefaultEventBudget);

struct CurrentSample {
  long w_plus = 0;
  long w_minus = 0;
  long w = 0;
};

/// Current from the label positions: w_plus - w_minus. Also evaluates
/// sum_{x in B} (eta(L_t(x)) - eta(x)) and throws if the two disagree.
CurrentSample current_of(const std::vector<std::size_t>& final_labels,
                         const std::vector<std::size_t>& final_positions,
                         const Configuration& eta, const Partition& partition);
CurrentSample current_of(const StirringTrajectory& trajectory, const Configuration& eta,
                         const Partition& partition);

struct ReplicaSummary {
  std::size_t n_replicas = 0;
  std::uint64_t seed_root = 0;
  double horizon = 0.0;
  std::vector<long> samples;  // indexed by replica
  std::map<long, std::size_t> histogram;
  double mean = 0.0;
  double variance = 0.0;         // unbiased
  double variance_stderr = 0.0;  // from the fourth central moment

  double mean_stderr() const {
    return n_replicas > 0 ? std::sqrt(variance / static_cast<double>(n_replicas)) : 0.0;
  }
  /// Empirical pmf over the observed support, offset by the minimum sample.
  std::pair<long, std::vector<double>> empirical_pmf() const;
};

/// Builds the summary statistics from samples in replica order.
ReplicaSummary summarize(std::vector<long> samples, std::uint64_t seed_root, double horizon);

struct ReplicaOptions {
  Execution exec = Execution::parallel;
  double event_budget = kDefaultEventBudget;
};

/// Independent replicas; replica r draws from the stream keyed by
/// (seed_root, r), so serial and parallel runs give identical samples.
ReplicaSummary run_replicas(const RateKernel& kernel, const Configuration& eta,
                            const Partition& partition, double horizon, std::size_t n_replicas,
                            std::uint64_t seed_root, const ReplicaOptions& options = {});

struct NestedSummary {
  ReplicaSummary outer;
  ReplicaSummary inner;
};

/// Runs an outer window and an inner sub-window on the same Poisson clocks:
/// every ring of an outer pair lying inside the inner window also rings in
/// the inner system. The inner kernel must be the restriction of the outer
/// one. Marginally each summary has the law of an independent run.
NestedSummary run_nested_replicas(const RateKernel& outer, const Configuration& outer_eta,
                                  const Partition& outer_partition, const RateKernel& inner,
                                  const Configuration& inner_eta,
                                  const Partition& inner_partition, double horizon,
                                  std::size_t n_replicas, std::uint64_t seed_root,
                                  const ReplicaOptions& options = {});

void to_json(nlohmann::json& j, const ReplicaSummary& summary);
/// "replica_index,w" rows.
void write_samples_csv(std::ostream& os, const ReplicaSummary& summary);

}  // namespace sep
