#include "sep/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sep/rng.hpp"

namespace sep {

namespace {

std::uint64_t pair_key(std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
}

void require_lattice(const SiteWindow& window) {
  if (!window.contiguous()) throw SepError("kernel requires lattice window");
}

}  // namespace

SiteWindow::SiteWindow(std::vector<Site> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) throw SepError("site window needs at least 2 sites");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!lookup_.emplace(labels_[i], i).second) throw SepError("duplicate site label");
  }
}

SiteWindow SiteWindow::lattice(Site first, Site last) {
  if (last <= first) throw SepError("site window needs at least 2 sites");
  std::vector<Site> labels(static_cast<std::size_t>(last - first + 1));
  std::iota(labels.begin(), labels.end(), first);
  return SiteWindow(std::move(labels));
}

SiteWindow SiteWindow::centered(std::size_t n) {
  const auto half = static_cast<Site>(n / 2);
  return lattice(-(half - 1), static_cast<Site>(n) - half);
}

bool SiteWindow::contiguous() const {
  for (std::size_t i = 1; i < labels_.size(); ++i) {
    if (labels_[i] != labels_[i - 1] + 1) return false;
  }
  return true;
}

std::size_t SiteWindow::index_of(Site x) const {
  auto it = lookup_.find(x);
  if (it == lookup_.end()) throw SepError("site outside window: " + std::to_string(x));
  return it->second;
}

RateKernel::RateKernel(SiteWindow window, std::vector<PairRate> pairs, std::string preset)
    : window_(std::move(window)),
      exit_rates_(window_.size(), 0.0),
      preset_(std::move(preset)) {
  pairs_.reserve(pairs.size());
  for (auto p : pairs) {
    if (p.i == p.j) throw SepError("self-pair in rate kernel");
    if (p.i >= window_.size() || p.j >= window_.size()) throw SepError("pair outside window");
    if (!(p.rate >= 0.0) || !std::isfinite(p.rate)) throw SepError("rates must be finite and >= 0");
    if (p.i > p.j) std::swap(p.i, p.j);
    if (p.rate == 0.0) continue;
    if (!lookup_.emplace(pair_key(p.i, p.j), p.rate).second) {
      throw SepError("pair listed twice in rate kernel");
    }
    pairs_.push_back(p);
    exit_rates_[p.i] += p.rate;
    exit_rates_[p.j] += p.rate;
    total_rate_ += p.rate;
  }
}

double RateKernel::rate_at(std::size_t i, std::size_t j) const {
  if (i == j) return 0.0;
  auto it = lookup_.find(pair_key(i, j));
  return it == lookup_.end() ? 0.0 : it->second;
}

double RateKernel::rate(Site x, Site y) const {
  return rate_at(window_.index_of(x), window_.index_of(y));
}

double RateKernel::max_exit_rate() const {
  return *std::max_element(exit_rates_.begin(), exit_rates_.end());
}

Partition::Partition(const SiteWindow& window, std::vector<Side> sides) : sides_(std::move(sides)) {
  if (sides_.size() != window.size()) throw SepError("partition length differs from window");
  const auto a = std::count(sides_.begin(), sides_.end(), Side::A);
  if (a == 0 || a == static_cast<long>(sides_.size())) {
    throw SepError("partition needs nonempty A and B");
  }
}

Partition Partition::split_at(const SiteWindow& window, Site split) {
  std::vector<Side> sides(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    sides[i] = window.site(i) <= split ? Side::A : Side::B;
  }
  return Partition(window, std::move(sides));
}

Partition Partition::from_a_set(const SiteWindow& window, const std::vector<Site>& a_sites) {
  std::vector<Side> sides(window.size(), Side::B);
  for (Site x : a_sites) sides[window.index_of(x)] = Side::A;
  return Partition(window, std::move(sides));
}

Configuration::Configuration(std::vector<std::uint8_t> occupation)
    : occupation_(std::move(occupation)) {
  for (auto& v : occupation_) {
    if (v > 1) throw SepError("occupation values must be 0 or 1");
  }
}

std::size_t Configuration::particles() const {
  return static_cast<std::size_t>(std::count(occupation_.begin(), occupation_.end(), 1));
}

bool Configuration::constant() const {
  return std::adjacent_find(occupation_.begin(), occupation_.end(), std::not_equal_to<>()) ==
         occupation_.end();
}

std::vector<double> Configuration::as_vector() const {
  return {occupation_.begin(), occupation_.end()};
}

RateKernel make_nearest_neighbor(const SiteWindow& window, double rate) {
  require_lattice(window);
  if (!(rate > 0.0)) throw SepError("nearest-neighbor rate must be positive");
  std::vector<PairRate> pairs;
  for (std::size_t i = 0; i + 1 < window.size(); ++i) pairs.push_back({i, i + 1, rate});
  return RateKernel(window, std::move(pairs), "nearest_neighbor");
}

RateKernel make_heavy_tail(const SiteWindow& window, double alpha, std::size_t cutoff) {
  if (!(alpha > 1.0)) throw SepError("tail index must exceed 1");
  if (alpha > 2.0) throw SepError("tail index must be at most 2");
  if (cutoff == 0) cutoff = window.size();

  double norm = 0.0;
  for (std::size_t n = 1; n <= cutoff; ++n) norm += std::pow(static_cast<double>(n), -alpha - 1.0);
  const double c = 0.5 / norm;

  std::vector<PairRate> pairs;
  for (std::size_t i = 0; i < window.size(); ++i) {
    for (std::size_t j = i + 1; j < window.size(); ++j) {
      const auto dist = static_cast<std::size_t>(std::llabs(window.site(j) - window.site(i)));
      if (dist > cutoff) continue;
      pairs.push_back({i, j, c * std::pow(static_cast<double>(dist), -alpha - 1.0)});
    }
  }
  return RateKernel(window, std::move(pairs), "heavy_tail");
}

RateKernel make_random_environment(const SiteWindow& window, std::uint64_t env_seed,
                                   double epsilon) {
  require_lattice(window);
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw SepError("epsilon must lie in (0,1)");
  Engine engine(mix64(env_seed));
  std::vector<PairRate> pairs;
  for (std::size_t i = 0; i + 1 < window.size(); ++i) {
    // 1 - (1 - eps) u with u in [0,1) lands in (eps, 1]
    const double omega = 1.0 - (1.0 - epsilon) * uniform01(engine);
    pairs.push_back({i, i + 1, omega});
  }
  return RateKernel(window, std::move(pairs), "random_environment");
}

Configuration step_configuration(const SiteWindow& window, const Partition& partition) {
  if (partition.size() != window.size()) throw SepError("partition length differs from window");
  std::vector<std::uint8_t> occ(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) occ[i] = partition.in_a(i) ? 1 : 0;
  return Configuration(std::move(occ));
}

Configuration product_configuration(const SiteWindow& window, double rho, std::uint64_t seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw SepError("density must lie in [0,1]");
  Engine engine(mix64(seed ^ 0x5bd1e995ULL));
  std::vector<std::uint8_t> occ(window.size());
  for (auto& v : occ) v = uniform01(engine) < rho ? 1 : 0;
  return Configuration(std::move(occ));
}

const std::vector<PresetInfo>& kernel_presets() {
  static const std::vector<PresetInfo> presets = {
      {"nearest_neighbor", "rate > 0", "p(i,i+1) = rate on a lattice window"},
      {"heavy_tail", "alpha in (1,2], cutoff >= 1 (default: window size)",
       "p(x,y) = c|x-y|^(-alpha-1) up to cutoff, one-sided rate sum 1/2"},
      {"random_environment", "env_seed, epsilon in (0,1)",
       "p(i,i+1) = omega_i, omega_i iid Uniform(epsilon,1]"},
  };
  return presets;
}

void to_json(nlohmann::json& j, const RateKernel& kernel) {
  nlohmann::json pairs = nlohmann::json::array();
  const auto& w = kernel.window();
  for (const auto& p : kernel.pairs()) pairs.push_back({w.site(p.i), w.site(p.j), p.rate});
  j = nlohmann::json{{"preset", kernel.preset()}, {"window", w.labels()}, {"pairs", pairs}};
}

RateKernel kernel_from_json(const nlohmann::json& j) {
  SiteWindow window(j.at("window").get<std::vector<Site>>());
  std::vector<PairRate> pairs;
  for (const auto& p : j.at("pairs")) {
    pairs.push_back({window.index_of(p.at(0).get<Site>()), window.index_of(p.at(1).get<Site>()),
                     p.at(2).get<double>()});
  }
  return RateKernel(std::move(window), std::move(pairs), j.value("preset", "custom"));
}

}  // namespace sep
