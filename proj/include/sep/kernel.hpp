#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace sep {

using Site = std::int64_t;

class SepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite, ordered set of distinct site labels. Internally every module works
/// with positions 0..size()-1; labels are only used at the API boundary.
class SiteWindow {
 public:
  explicit SiteWindow(std::vector<Site> labels);

  /// Contiguous window [first, last] of Z.
  static SiteWindow lattice(Site first, Site last);
  /// Contiguous window of `n` sites whose left half is {x <= 0}:
  /// [-(n/2 - 1), n - n/2].
  static SiteWindow centered(std::size_t n);

  std::size_t size() const { return labels_.size(); }
  Site site(std::size_t index) const { return labels_.at(index); }
  const std::vector<Site>& labels() const { return labels_; }
  bool contiguous() const;
  bool contains(Site x) const { return lookup_.count(x) != 0; }
  /// Throws SepError("site outside window") for unknown labels.
  std::size_t index_of(Site x) const;

  bool operator==(const SiteWindow& other) const { return labels_ == other.labels_; }

 private:
  std::vector<Site> labels_;
  std::unordered_map<Site, std::size_t> lookup_;
};

struct PairRate {
  std::size_t i;  // i < j, window positions
  std::size_t j;
  double rate;
};

/// Symmetric jump rates p(x,y) stored once per unordered pair, so
/// p(x,y) == p(y,x) holds structurally.
class RateKernel {
 public:
  RateKernel(SiteWindow window, std::vector<PairRate> pairs, std::string preset = "custom");

  const SiteWindow& window() const { return window_; }
  std::size_t size() const { return window_.size(); }
  const std::vector<PairRate>& pairs() const { return pairs_; }
  double total_rate() const { return total_rate_; }
  const std::string& preset() const { return preset_; }

  /// Rate between two window positions; zero for i == j or absent pairs.
  double rate_at(std::size_t i, std::size_t j) const;
  /// Rate between two site labels.
  double rate(Site x, Site y) const;
  /// Total jump rate out of position i.
  double exit_rate(std::size_t i) const { return exit_rates_.at(i); }
  double max_exit_rate() const;

 private:
  SiteWindow window_;
  std::vector<PairRate> pairs_;
  std::unordered_map<std::uint64_t, double> lookup_;
  std::vector<double> exit_rates_;
  double total_rate_ = 0.0;
  std::string preset_;
};

enum class Side : std::uint8_t { A, B };

/// A/B split of the window together with H = -1 on A, +1 on B.
class Partition {
 public:
  Partition(const SiteWindow& window, std::vector<Side> sides);
  /// A = {x <= split}, B = {x > split}.
  static Partition split_at(const SiteWindow& window, Site split = 0);
  static Partition from_a_set(const SiteWindow& window, const std::vector<Site>& a_sites);

  std::size_t size() const { return sides_.size(); }
  Side side(std::size_t index) const { return sides_.at(index); }
  bool in_a(std::size_t index) const { return sides_[index] == Side::A; }
  bool in_b(std::size_t index) const { return sides_[index] == Side::B; }
  double h(std::size_t index) const { return in_b(index) ? 1.0 : -1.0; }
  const std::vector<Side>& sides() const { return sides_; }

 private:
  std::vector<Side> sides_;
};

/// Occupation vector eta in {0,1}^window.
class Configuration {
 public:
  explicit Configuration(std::vector<std::uint8_t> occupation);

  std::size_t size() const { return occupation_.size(); }
  std::uint8_t operator[](std::size_t index) const { return occupation_[index]; }
  const std::vector<std::uint8_t>& occupation() const { return occupation_; }
  std::size_t particles() const;
  bool constant() const;
  std::vector<double> as_vector() const;

  bool operator==(const Configuration& other) const = default;

 private:
  std::vector<std::uint8_t> occupation_;
};

// Presets.
RateKernel make_nearest_neighbor(const SiteWindow& window, double rate);
/// p(x,y) = c |x-y|^(-alpha-1) for 1 <= |x-y| <= cutoff, with c chosen so the
/// one-sided rate sum over n = 1..cutoff equals 1/2. cutoff == 0 means the
/// full window span.
RateKernel make_heavy_tail(const SiteWindow& window, double alpha, std::size_t cutoff = 0);
/// Bond rates omega_i ~ Uniform(epsilon, 1], reproducible from env_seed.
RateKernel make_random_environment(const SiteWindow& window, std::uint64_t env_seed,
                                   double epsilon);

Configuration step_configuration(const SiteWindow& window, const Partition& partition);
Configuration product_configuration(const SiteWindow& window, double rho, std::uint64_t seed);

struct PresetInfo {
  std::string name;
  std::string parameters;
  std::string description;
};
const std::vector<PresetInfo>& kernel_presets();

void to_json(nlohmann::json& j, const RateKernel& kernel);
RateKernel kernel_from_json(const nlohmann::json& j);

}  // namespace sep
