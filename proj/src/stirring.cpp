#include "sep/stirring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace sep {

namespace {

void require_budget(const RateKernel& kernel, double horizon, double budget) {
  if (!(horizon >= 0.0)) throw SepError("horizon must be nonnegative");
  const double expected = kernel.total_rate() * horizon;
  if (expected > budget) {
    throw SepError("event budget exceeded: expected " + std::to_string(expected) +
                   " events per replica, budget " + std::to_string(budget));
  }
}

std::vector<double> pair_weights(const RateKernel& kernel) {
  std::vector<double> w;
  w.reserve(kernel.pairs().size());
  for (const auto& p : kernel.pairs()) w.push_back(p.rate);
  if (w.empty()) w.push_back(1.0);  // never sampled: total rate is zero
  return w;
}

/// Label bookkeeping reused across replicas of one worker.
struct LabelState {
  std::vector<std::size_t> label_at;  // site -> label
  std::vector<std::size_t> pos;       // label -> site

  explicit LabelState(std::size_t n) : label_at(n), pos(n) {}
  void reset() {
    std::iota(label_at.begin(), label_at.end(), std::size_t{0});
    std::iota(pos.begin(), pos.end(), std::size_t{0});
  }
  void swap_sites(std::size_t i, std::size_t j) {
    std::swap(label_at[i], label_at[j]);
    pos[label_at[i]] = i;
    pos[label_at[j]] = j;
  }
};

/// Draws the number of rings in [0, horizon] and the ringing pairs in
/// time order; the ring times themselves do not affect the final labels.
template <typename OnRing>
void drive_clocks(Engine& engine, const AliasTable& table, double mass, OnRing&& on_ring) {
  if (mass <= 0.0) return;
  std::poisson_distribution<long long> count(mass);
  const long long rings = count(engine);
  for (long long k = 0; k < rings; ++k) on_ring(table.sample(uniform01(engine)));
}

}  // namespace

AliasTable::AliasTable(const std::vector<double>& weights)
    : prob_(weights.size(), 0.0), alias_(weights.size(), 0) {
  if (weights.empty()) throw SepError("alias table needs at least one weight");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw SepError("alias table needs positive total weight");

  const std::size_t n = weights.size();
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t k = 0; k < n; ++k) {
    if (weights[k] < 0.0) throw SepError("alias weights must be nonnegative");
    scaled[k] = weights[k] * static_cast<double>(n) / total;
    (scaled[k] < 1.0 ? small : large).push_back(k);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (std::size_t k : large) prob_[k] = 1.0, alias_[k] = k;
  for (std::size_t k : small) prob_[k] = 1.0, alias_[k] = k;
}

double AliasTable::mass(std::size_t k) const {
  double m = prob_[k];
  for (std::size_t c = 0; c < prob_.size(); ++c) {
    if (alias_[c] == k && c != k) m += 1.0 - prob_[c];
  }
  return m / static_cast<double>(prob_.size());
}

StirringTrajectory simulate(const RateKernel& kernel, double horizon, std::uint64_t seed,
                            double event_budget) {
  require_budget(kernel, horizon, event_budget);
  const std::size_t n = kernel.size();
  StirringTrajectory traj{kernel.window(), horizon, {}, {}, {}};
  LabelState state(n);
  state.reset();

  if (kernel.total_rate() > 0.0 && horizon > 0.0) {
    const AliasTable table(pair_weights(kernel));
    Engine engine = make_engine(seed, 0);
    double now = 0.0;
    while (true) {
      now += -std::log1p(-uniform01(engine)) / kernel.total_rate();
      if (now > horizon) break;
      if (static_cast<double>(traj.events.size()) >= event_budget) {
        throw SepError("event budget exceeded during simulation");
      }
      const auto& p = kernel.pairs()[table.sample(uniform01(engine))];
      traj.events.push_back({now, p.i, p.j});
      state.swap_sites(p.i, p.j);
    }
  }
  traj.final_labels = std::move(state.label_at);
  traj.final_positions = std::move(state.pos);
  return traj;
}

CurrentSample current_of(const std::vector<std::size_t>& final_labels,
                         const std::vector<std::size_t>& final_positions,
                         const Configuration& eta, const Partition& partition) {
  const std::size_t n = eta.size();
  if (final_labels.size() != n || partition.size() != n) {
    throw SepError("trajectory, configuration and partition must share a window");
  }
  CurrentSample out;
  long through_b = 0;
  for (std::size_t x = 0; x < n; ++x) {
    if (eta[x]) {
      const std::size_t at = final_positions[x];
      if (partition.in_a(x) && partition.in_b(at)) ++out.w_plus;
      if (partition.in_b(x) && partition.in_a(at)) ++out.w_minus;
    }
    if (partition.in_b(x)) {
      through_b += static_cast<long>(eta[final_labels[x]]) - static_cast<long>(eta[x]);
    }
  }
  out.w = out.w_plus - out.w_minus;
  if (out.w != through_b) throw SepError("stirring current identity violated");
  return out;
}

CurrentSample current_of(const StirringTrajectory& trajectory, const Configuration& eta,
                         const Partition& partition) {
  return current_of(trajectory.final_labels, trajectory.final_positions, eta, partition);
}

std::pair<long, std::vector<double>> ReplicaSummary::empirical_pmf() const {
  if (histogram.empty()) return {0, {}};
  const long lo = histogram.begin()->first;
  const long hi = histogram.rbegin()->first;
  std::vector<double> pmf(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (const auto& [w, c] : histogram) {
    pmf[static_cast<std::size_t>(w - lo)] = static_cast<double>(c) / static_cast<double>(n_replicas);
  }
  return {lo, pmf};
}

ReplicaSummary summarize(std::vector<long> samples, std::uint64_t seed_root, double horizon) {
  ReplicaSummary s;
  s.n_replicas = samples.size();
  s.seed_root = seed_root;
  s.horizon = horizon;
  if (samples.empty()) return s;

  long double sum = 0.0L;
  for (long w : samples) {
    sum += w;
    ++s.histogram[w];
  }
  const long double n = static_cast<long double>(samples.size());
  const long double mean = sum / n;
  long double m2 = 0.0L, m4 = 0.0L;
  for (long w : samples) {
    const long double d = w - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  s.mean = static_cast<double>(mean);
  if (samples.size() > 1) {
    const long double var = m2 / (n - 1.0L);
    s.variance = static_cast<double>(var);
    const long double c4 = m4 / n;
    const long double se2 = (c4 - var * var * (n - 3.0L) / (n - 1.0L)) / n;
    s.variance_stderr = static_cast<double>(std::sqrt(std::max(0.0L, se2)));
  }
  s.samples = std::move(samples);
  return s;
}

ReplicaSummary run_replicas(const RateKernel& kernel, const Configuration& eta,
                            const Partition& partition, double horizon, std::size_t n_replicas,
                            std::uint64_t seed_root, const ReplicaOptions& options) {
  if (n_replicas == 0) throw SepError("need at least one replica");
  if (eta.size() != kernel.size() || partition.size() != kernel.size()) {
    throw SepError("kernel, configuration and partition must share a window");
  }
  require_budget(kernel, horizon, options.event_budget);
  const AliasTable table(pair_weights(kernel));
  const double mass = kernel.total_rate() * horizon;
  const auto& pairs = kernel.pairs();
  std::vector<long> samples(n_replicas);

#pragma omp parallel if (options.exec == Execution::parallel)
  {
    LabelState state(kernel.size());
#pragma omp for schedule(dynamic, 64)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(n_replicas); ++r) {
      state.reset();
      Engine engine = make_engine(seed_root, static_cast<std::uint64_t>(r));
      drive_clocks(engine, table, mass, [&](std::size_t k) { state.swap_sites(pairs[k].i, pairs[k].j); });
      samples[static_cast<std::size_t>(r)] = current_of(state.label_at, state.pos, eta, partition).w;
    }
  }
  return summarize(std::move(samples), seed_root, horizon);
}

NestedSummary run_nested_replicas(const RateKernel& outer, const Configuration& outer_eta,
                                  const Partition& outer_partition, const RateKernel& inner,
                                  const Configuration& inner_eta,
                                  const Partition& inner_partition, double horizon,
                                  std::size_t n_replicas, std::uint64_t seed_root,
                                  const ReplicaOptions& options) {
  if (n_replicas == 0) throw SepError("need at least one replica");
  require_budget(outer, horizon, options.event_budget);
  const auto& ow = outer.window();
  const auto& iw = inner.window();

  // Map outer positions into the inner window and check that the inner
  // kernel is exactly the restriction of the outer one.
  constexpr std::size_t kOutside = static_cast<std::size_t>(-1);
  std::vector<std::size_t> to_inner(ow.size(), kOutside);
  for (std::size_t k = 0; k < iw.size(); ++k) to_inner[ow.index_of(iw.site(k))] = k;
  std::size_t restricted = 0;
  for (const auto& p : outer.pairs()) {
    if (to_inner[p.i] == kOutside || to_inner[p.j] == kOutside) continue;
    ++restricted;
    if (inner.rate_at(to_inner[p.i], to_inner[p.j]) != p.rate) {
      throw SepError("inner kernel is not the restriction of the outer kernel");
    }
  }
  if (restricted != inner.pairs().size()) {
    throw SepError("inner kernel is not the restriction of the outer kernel");
  }

  const AliasTable table(pair_weights(outer));
  const double mass = outer.total_rate() * horizon;
  const auto& pairs = outer.pairs();
  std::vector<long> outer_w(n_replicas), inner_w(n_replicas);

#pragma omp parallel if (options.exec == Execution::parallel)
  {
    LabelState big(ow.size());
    LabelState small(iw.size());
#pragma omp for schedule(dynamic, 64)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(n_replicas); ++r) {
      big.reset();
      small.reset();
      Engine engine = make_engine(seed_root, static_cast<std::uint64_t>(r));
      drive_clocks(engine, table, mass, [&](std::size_t k) {
        const auto& p = pairs[k];
        big.swap_sites(p.i, p.j);
        const std::size_t a = to_inner[p.i];
        const std::size_t b = to_inner[p.j];
        if (a != kOutside && b != kOutside) small.swap_sites(a, b);
      });
      const auto idx = static_cast<std::size_t>(r);
      outer_w[idx] = current_of(big.label_at, big.pos, outer_eta, outer_partition).w;
      inner_w[idx] = current_of(small.label_at, small.pos, inner_eta, inner_partition).w;
    }
  }
  return {summarize(std::move(outer_w), seed_root, horizon),
          summarize(std::move(inner_w), seed_root, horizon)};
}

void to_json(nlohmann::json& j, const ReplicaSummary& summary) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [w, c] : summary.histogram) hist[std::to_string(w)] = c;
  j = nlohmann::json{{"n", summary.n_replicas},
                     {"mean", summary.mean},
                     {"var", summary.variance},
                     {"var_stderr", summary.variance_stderr},
                     {"horizon", summary.horizon},
                     {"seed_root", summary.seed_root},
                     {"histogram", hist}};
}

void write_samples_csv(std::ostream& os, const ReplicaSummary& summary) {
  os << "replica_index,w\n";
  for (std::size_t r = 0; r < summary.samples.size(); ++r) os << r << ',' << summary.samples[r] << '\n';
}

}  // namespace sep
