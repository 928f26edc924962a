#include "sep/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <sstream>

#include "sep/analysis.hpp"
#include "sep/chain.hpp"
#include "sep/exact.hpp"
#include "sep/rayleigh.hpp"
#include "sep/report_io.hpp"
#include "sep/rng.hpp"
#include "sep/stirring.hpp"

namespace sep {

using nlohmann::json;

namespace {

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

/// Object reader that remembers which keys were consumed, so leftovers can
/// be reported as unknown.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }
  std::string path(const std::string& key) const { return join_path(path_, key); }

  const json* child(const std::string& key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = child(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(path(key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(path(key), "expected a finite number");
    return x;
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    const json* v = child(key);
    if (!v) return fallback;
    if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
      throw ConfigError(path(key), "expected a nonnegative integer");
    }
    return v->get<std::uint64_t>();
  }

  Site integer(const std::string& key, Site fallback) {
    const json* v = child(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
    return v->get<Site>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = child(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(path(key), "expected a string");
    return v->get<std::string>();
  }

  template <class T>
  std::vector<T> array(const std::string& key, bool integral) {
    const json* v = child(key);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(path(key), "expected an array");
    std::vector<T> out;
    for (std::size_t k = 0; k < v->size(); ++k) {
      const auto& e = (*v)[k];
      const bool ok = integral ? e.is_number_integer() : e.is_number();
      if (!ok) {
        throw ConfigError(path(key) + "[" + std::to_string(k) + "]",
                          integral ? "expected an integer" : "expected a number");
      }
      out.push_back(e.get<T>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.count(key)) throw ConfigError(path(key), "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

const json kEmptyObject = json::object();

const json& sub(Reader& r, const std::string& key) {
  const json* v = r.child(key);
  return v ? *v : kEmptyObject;
}

bool known_preset(const std::string& name) {
  for (const auto& p : kernel_presets()) {
    if (p.name == name) return true;
  }
  return false;
}

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::exact: return "exact";
    case Mode::mc: return "mc";
    case Mode::both: return "both";
  }
  return "exact";
}

Partition build_partition(const ExperimentConfig& c, const SiteWindow& window) {
  return c.a_sites ? Partition::from_a_set(window, *c.a_sites) : Partition::split_at(window, c.split);
}

Configuration build_initial(const InitialSpec& spec, const SiteWindow& window,
                            const Partition& partition) {
  if (spec.type == "step") return step_configuration(window, partition);
  if (spec.type == "product") return product_configuration(window, spec.rho, spec.seed);
  std::vector<std::uint8_t> occ;
  for (int v : spec.occupation) occ.push_back(static_cast<std::uint8_t>(v));
  return Configuration(std::move(occ));
}

}  // namespace

RateKernel build_kernel(const KernelSpec& spec, const SiteWindow& window) {
  if (spec.preset == "nearest_neighbor") return make_nearest_neighbor(window, spec.rate);
  if (spec.preset == "heavy_tail") return make_heavy_tail(window, spec.alpha, spec.cutoff);
  if (spec.preset == "random_environment") {
    return make_random_environment(window, spec.env_seed, spec.epsilon);
  }
  throw SepError("unknown kernel preset: " + spec.preset);
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig c;
  Reader root(doc, "");
  root.unsigned_int("schema_version", kSchemaVersion);

  {
    Reader k(sub(root, "kernel"), "kernel");
    c.kernel.preset = k.string("preset", c.kernel.preset);
    if (!known_preset(c.kernel.preset)) {
      throw ConfigError("kernel.preset", "unknown preset '" + c.kernel.preset + "'");
    }
    c.kernel.rate = k.number("rate", c.kernel.rate);
    c.kernel.alpha = k.number("alpha", c.kernel.alpha);
    c.kernel.cutoff = k.unsigned_int("cutoff", c.kernel.cutoff);
    c.kernel.epsilon = k.number("epsilon", c.kernel.epsilon);
    c.kernel.env_seed = k.unsigned_int("env_seed", c.kernel.env_seed);
    k.finish();
  }

  {
    Reader w(sub(root, "window"), "window");
    if (w.has("sites")) {
      if (w.has("first") || w.has("last")) {
        throw ConfigError("window", "give either sites or first/last, not both");
      }
      const auto n = w.unsigned_int("sites", 0);
      if (n < 2) throw ConfigError("window.sites", "window needs at least 2 sites");
      const auto centered = SiteWindow::centered(n);
      c.window_first = centered.labels().front();
      c.window_last = centered.labels().back();
    } else {
      c.window_first = w.integer("first", c.window_first);
      c.window_last = w.integer("last", c.window_last);
      if (c.window_last <= c.window_first) throw ConfigError("window.last", "must exceed window.first");
    }
    w.finish();
  }

  {
    Reader p(sub(root, "partition"), "partition");
    if (p.has("a_sites")) {
      if (p.has("split")) throw ConfigError("partition", "give either split or a_sites, not both");
      c.a_sites = p.array<Site>("a_sites", true);
    } else {
      c.split = p.integer("split", c.split);
    }
    p.finish();
  }

  {
    Reader i(sub(root, "initial"), "initial");
    c.initial.type = i.string("type", c.initial.type);
    if (c.initial.type != "step" && c.initial.type != "product" && c.initial.type != "explicit") {
      throw ConfigError("initial.type", "expected step, product or explicit");
    }
    c.initial.rho = i.number("rho", c.initial.rho);
    if (c.initial.rho < 0.0 || c.initial.rho > 1.0) throw ConfigError("initial.rho", "must lie in [0,1]");
    c.initial.seed = i.unsigned_int("seed", c.initial.seed);
    c.initial.occupation = i.array<int>("occupation", true);
    if (c.initial.type == "explicit") {
      if (c.initial.occupation.size() != c.window_size()) {
        throw ConfigError("initial.occupation", "needs one entry per window site");
      }
      for (std::size_t k = 0; k < c.initial.occupation.size(); ++k) {
        const int v = c.initial.occupation[k];
        if (v != 0 && v != 1) {
          throw ConfigError("initial.occupation[" + std::to_string(k) + "]", "expected 0 or 1");
        }
      }
    } else if (!c.initial.occupation.empty()) {
      throw ConfigError("initial.occupation", "only valid with type explicit");
    }
    i.finish();
  }

  if (!root.has("t_grid")) throw ConfigError("t_grid", "required");
  c.t_grid = root.array<double>("t_grid", false);
  if (c.t_grid.empty()) throw ConfigError("t_grid", "must be nonempty");
  for (std::size_t k = 0; k < c.t_grid.size(); ++k) {
    const std::string where = "t_grid[" + std::to_string(k) + "]";
    if (!(c.t_grid[k] >= 0.0) || !std::isfinite(c.t_grid[k])) {
      throw ConfigError(where, "times must be finite and nonnegative");
    }
    if (k > 0 && !(c.t_grid[k] > c.t_grid[k - 1])) throw ConfigError(where, "times must increase");
  }

  const auto mode = root.string("mode", "exact");
  if (mode == "exact") c.mode = Mode::exact;
  else if (mode == "mc") c.mode = Mode::mc;
  else if (mode == "both") c.mode = Mode::both;
  else throw ConfigError("mode", "expected exact, mc or both");

  c.n_replicas = root.unsigned_int("n_replicas", c.n_replicas);
  if (c.mode != Mode::exact && c.n_replicas == 0) throw ConfigError("n_replicas", "must be positive");
  c.n_max = root.unsigned_int("n_max", c.n_max);
  if (c.n_max < 2 || c.n_max > 20) throw ConfigError("n_max", "must lie in [2, 20]");
  if (c.mode == Mode::exact && c.window_size() > c.n_max) {
    throw ConfigError("window", "exact mode needs at most n_max = " + std::to_string(c.n_max) +
                                    " sites, got " + std::to_string(c.window_size()));
  }

  {
    Reader t(sub(root, "tolerances"), "tolerances");
    c.tolerances.semigroup = t.number("semigroup", c.tolerances.semigroup);
    c.tolerances.quadrature = t.number("quadrature", c.tolerances.quadrature);
    c.tolerances.tol_im = t.number("tol_im", c.tolerances.tol_im);
    c.tolerances.event_budget = t.number("event_budget", c.tolerances.event_budget);
    const std::pair<const char*, double> values[] = {{"semigroup", c.tolerances.semigroup},
                                                     {"quadrature", c.tolerances.quadrature},
                                                     {"tol_im", c.tolerances.tol_im},
                                                     {"event_budget", c.tolerances.event_budget}};
    for (const auto& [key, v] : values) {
      if (!(v > 0.0)) throw ConfigError(t.path(key), "must be positive");
    }
    t.finish();
  }

  {
    Reader o(sub(root, "outputs"), "outputs");
    c.outputs.dir = o.string("dir", c.outputs.dir);
    c.outputs.summary = o.string("summary", c.outputs.summary);
    c.outputs.samples = o.string("samples", c.outputs.samples);
    c.outputs.reports = o.string("reports", c.outputs.reports);
    o.finish();
  }

  c.seed = root.unsigned_int("seed", c.seed);
  root.finish();

  // Semantic checks that need the built objects.
  const auto window = SiteWindow::lattice(c.window_first, c.window_last);
  try {
    build_kernel(c.kernel, window);
  } catch (const SepError& e) {
    throw ConfigError("kernel", e.what());
  }
  std::optional<Partition> partition;
  try {
    partition.emplace(build_partition(c, window));
  } catch (const SepError& e) {
    throw ConfigError("partition", e.what());
  }
  try {
    build_initial(c.initial, window, *partition);
  } catch (const SepError& e) {
    throw ConfigError("initial", e.what());
  }
  return c;
}

json resolved_config(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kernel"] = {{"preset", c.kernel.preset},   {"rate", c.kernel.rate},
                 {"alpha", c.kernel.alpha},     {"cutoff", c.kernel.cutoff},
                 {"epsilon", c.kernel.epsilon}, {"env_seed", c.kernel.env_seed}};
  j["window"] = {{"first", c.window_first}, {"last", c.window_last}};
  if (c.a_sites) j["partition"] = {{"a_sites", *c.a_sites}};
  else j["partition"] = {{"split", c.split}};
  j["initial"] = {{"type", c.initial.type}, {"rho", c.initial.rho}, {"seed", c.initial.seed}};
  if (c.initial.type == "explicit") j["initial"]["occupation"] = c.initial.occupation;
  j["t_grid"] = c.t_grid;
  j["mode"] = mode_name(c.mode);
  j["n_replicas"] = c.n_replicas;
  j["n_max"] = c.n_max;
  j["tolerances"] = {{"semigroup", c.tolerances.semigroup},
                     {"quadrature", c.tolerances.quadrature},
                     {"tol_im", c.tolerances.tol_im},
                     {"event_budget", c.tolerances.event_budget}};
  j["outputs"] = {{"dir", c.outputs.dir},
                  {"summary", c.outputs.summary},
                  {"samples", c.outputs.samples},
                  {"reports", c.outputs.reports}};
  j["seed"] = c.seed;
  return j;
}

namespace {

json certificate_json(const RootCertificate& cert) {
  return json{{"ok", cert.ok},
              {"max_im", cert.max_im},
              {"max_re", cert.max_re},
              {"root_scale", cert.root_scale},
              {"zero_roots", cert.zero_roots},
              {"dropped_degree", cert.dropped_degree},
              {"warnings", cert.warnings}};
}

struct ExactAtTime {
  json doc;
  SumLaw law;
  std::optional<NormalityReport> normality;
  bool checks_passed = true;
};

ExactAtTime exact_at(const ExperimentConfig& c, const RateKernel& kernel, const Configuration& eta,
                     const Partition& partition, double t, json& warnings) {
  const double tol = c.tolerances.semigroup;
  ExactAtTime out;
  const auto full = full_law(kernel, eta, t, c.n_max, tol);
  out.law = current_law(full, partition);
  const double variance = variance_current_exact(kernel, eta, partition, t, tol);
  const auto identity = variance_identity(kernel, eta, t, c.tolerances.quadrature, tol);
  const double lb = lower_bound(kernel, eta, partition, t, c.tolerances.quadrature, tol);

  const double id_tol = std::max(1e-6, 1e-4 * identity.lhs);
  const bool id_ok = identity.abs_err() <= id_tol;
  const bool var_ok = std::abs(variance - out.law.variance()) <= 1e-8;
  const bool lb_ok = lb <= 4.0 * variance + 1e-8;

  json& d = out.doc;
  d["variance"] = variance;
  d["law_mean"] = out.law.mean();
  d["law_variance"] = out.law.variance();
  d["current_law"] = out.law;
  d["variance_identity"] = identity;
  d["variance_identity"]["tolerance"] = id_tol;
  d["lower_bound"] = lb;
  d["full_law_accuracy"] = full.accuracy;

  bool cert_ok = true;
  std::optional<double> rate;
  const auto poly = genpoly_from_sumlaw(out.law);
  if (poly.degree() >= 1) {
    const auto cert = certify_real_rooted(poly, c.tolerances.tol_im);
    d["certificate"] = certificate_json(cert);
    for (const auto& w : cert.warnings) warnings.push_back("t=" + std::to_string(t) + ": " + w);
    cert_ok = cert.ok;
    if (cert.ok) {
      const auto dec = bernoulli_decompose(poly, c.tolerances.tol_im);
      d["decomposition"] = dec;
      if (dec.variance > 0.0) rate = esseen_rate(dec);
    }
  }
  if (out.law.variance() > 0.0) {
    out.normality = normality_report(out.law, rate);
    d["normality"] = *out.normality;
  }
  d["checks"] = {{"variance_identity", id_ok},
                 {"variance_matches_law", var_ok},
                 {"lower_bound", lb_ok},
                 {"real_rooted", cert_ok}};
  out.checks_passed = id_ok && var_ok && lb_ok && cert_ok;
  return out;
}

}  // namespace

RunOutcome run(const ExperimentConfig& c, const RunOptions& options) {
  const auto window = SiteWindow::lattice(c.window_first, c.window_last);
  const auto kernel = build_kernel(c.kernel, window);
  const auto partition = build_partition(c, window);
  const auto eta = build_initial(c.initial, window, partition);
  const bool do_exact = c.mode != Mode::mc && window.size() <= c.n_max;
  const bool do_mc = c.mode != Mode::exact;
  const double tol = c.tolerances.semigroup;

  const std::filesystem::path dir(c.outputs.dir);
  OutputFile summary_file(dir / c.outputs.summary);
  OutputFile reports_file(dir / c.outputs.reports);
  std::optional<OutputFile> samples_file;
  if (do_mc) {
    samples_file.emplace(dir / c.outputs.samples);
    write_csv_preamble(samples_file->stream());
  }

  json summary;
  summary["config"] = resolved_config(c);
  json warnings = json::array();
  bool all_ok = true;

  try {
    summary["kernel"] = {{"preset", kernel.preset()},
                         {"sites", kernel.size()},
                         {"pairs", kernel.pairs().size()},
                         {"total_rate", kernel.total_rate()},
                         {"max_exit_rate", kernel.max_exit_rate()}};
    summary["initial"] = {{"particles", eta.particles()}, {"occupation", eta.occupation()}};
    if (c.mode == Mode::both && !do_exact) {
      warnings.push_back("exact laws skipped: window has more than n_max = " +
                         std::to_string(c.n_max) + " sites");
    }

    // One-particle chain profiles.
    const auto means = expected_current_profile(kernel, eta, partition, c.t_grid, tol);
    const auto balance = balance_profile(kernel, partition, c.t_grid, tol);
    summary["balance"] = {{"min_at_last", balance.min_at_last()},
                          {"max_at_last", balance.max_at_last()}};
    if (eta.particles() > 0) {
      const auto rig = rigidity_profile(kernel, eta, c.t_grid, tol);
      summary["rigidity"] = {{"profile", rig}, {"still_growing", still_growing(rig)}};
    }

    std::vector<std::pair<double, NormalityReport>> reports;
    std::vector<double> variances;
    json results = json::array();
    for (std::size_t k = 0; k < c.t_grid.size(); ++k) {
      const double t = c.t_grid[k];
      json row{{"t", t}, {"mean", means[k]}};
      std::optional<ExactAtTime> ex;
      if (do_exact) {
        ex = exact_at(c, kernel, eta, partition, t, warnings);
        all_ok = all_ok && ex->checks_passed;
        row["exact"] = ex->doc;
      }
      std::optional<NormalityReport> mc_report;
      double variance = ex ? ex->law.variance() : 0.0;
      if (do_mc) {
        ReplicaOptions ro;
        ro.exec = options.exec;
        ro.event_budget = c.tolerances.event_budget;
        const auto reps = run_replicas(kernel, eta, partition, t, c.n_replicas, stream_key(c.seed, k), ro);
        append_samples_csv(samples_file->stream(), reps, k == 0);
        samples_file->stream().flush();
        json mc = reps;
        mc["mean_stderr"] = reps.mean_stderr();
        if (reps.n_replicas >= 100 && reps.variance > 0.0) {
          mc_report = normality_report(reps);
          mc["normality"] = *mc_report;
        }
        if (reps.mean_stderr() > 0.0) mc["mean_z"] = (reps.mean - means[k]) / reps.mean_stderr();
        if (ex) {
          const auto [offset, pmf] = reps.empirical_pmf();
          mc["tv_exact_empirical"] = total_variation(ex->law.support_offset, ex->law.pmf, offset, pmf);
        }
        row["mc"] = mc;
        variance = reps.variance;
      }
      variances.push_back(variance);
      if (mc_report) reports.emplace_back(t, *mc_report);
      else if (ex && ex->normality) reports.emplace_back(t, *ex->normality);
      results.push_back(std::move(row));
    }
    summary["results"] = results;

    // Growth exponents over the grid, when the data allow a log-log fit.
    json growth;
    try {
      const auto g = growth_fit(c.t_grid, means);
      growth["mean"] = {{"slope", g.log_log_slope}, {"stderr", g.slope_stderr}};
    } catch (const SepError& e) {
      growth["mean"] = nullptr;
    }
    try {
      const auto g = growth_fit(c.t_grid, variances);
      growth["variance"] = {{"slope", g.log_log_slope}, {"stderr", g.slope_stderr}};
    } catch (const SepError& e) {
      growth["variance"] = nullptr;
    }
    summary["growth"] = growth;
    try {
      const auto fit = rate_regression(reports);
      summary["rate"] = {{"fitted_c", fit.fitted_c},
                         {"slope", fit.slope},
                         {"slope_stderr", fit.slope_stderr},
                         {"ok", fit.ok}};
    } catch (const SepError& e) {
      summary["rate"] = nullptr;
    }

    write_reports_table(reports_file.stream(), reports);
  } catch (const std::exception& e) {
    summary["error"] = e.what();
    summary["warnings"] = warnings;
    write_json_document(summary_file.stream(), summary);
    throw;
  }

  summary["warnings"] = warnings;
  summary["checks_passed"] = all_ok;
  write_json_document(summary_file.stream(), summary);

  RunOutcome out;
  out.exit_status = all_ok ? 0 : 1;
  summary_file.commit();
  reports_file.commit();
  out.files = {summary_file.path(), reports_file.path()};
  if (samples_file) {
    samples_file->commit();
    out.files.push_back(samples_file->path());
  }
  out.summary = std::move(summary);
  return out;
}

// ---- property suites -------------------------------------------------------

PresetGrid parse_grid(const json& doc) {
  PresetGrid g;
  Reader r(doc, "grid");
  if (const json* v = r.child("presets")) {
    if (!v->is_array()) throw ConfigError("grid.presets", "expected an array");
    g.presets.clear();
    for (const auto& e : *v) {
      if (!e.is_string() || !known_preset(e.get<std::string>())) {
        throw ConfigError("grid.presets", "unknown preset " + e.dump());
      }
      g.presets.push_back(e.get<std::string>());
    }
  }
  if (r.has("windows")) {
    g.windows.clear();
    for (auto n : r.array<std::uint64_t>("windows", true)) {
      if (n < 2 || n > 12) throw ConfigError("grid.windows", "window sizes must lie in [2, 12]");
      g.windows.push_back(n);
    }
  }
  if (const json* v = r.child("initials")) {
    if (!v->is_array()) throw ConfigError("grid.initials", "expected an array");
    g.initials.clear();
    for (const auto& e : *v) {
      if (e != "step" && e != "product") throw ConfigError("grid.initials", "expected step or product");
      g.initials.push_back(e.get<std::string>());
    }
  }
  if (r.has("times")) g.times = r.array<double>("times", false);
  for (double t : g.times) {
    if (!(t >= 0.0)) throw ConfigError("grid.times", "times must be nonnegative");
  }
  g.rho = r.number("rho", g.rho);
  g.ic_seed = r.unsigned_int("ic_seed", g.ic_seed);
  g.env_seed = r.unsigned_int("env_seed", g.env_seed);
  g.alpha = r.number("alpha", g.alpha);
  g.epsilon = r.number("epsilon", g.epsilon);
  r.finish();
  return g;
}

json grid_to_json(const PresetGrid& g) {
  return json{{"presets", g.presets}, {"windows", g.windows}, {"initials", g.initials},
              {"times", g.times},     {"rho", g.rho},         {"ic_seed", g.ic_seed},
              {"env_seed", g.env_seed}, {"alpha", g.alpha},   {"epsilon", g.epsilon}};
}

std::vector<GridInstance> grid_instances(const PresetGrid& g) {
  std::vector<GridInstance> out;
  if (g.empty()) return out;
  for (const auto& preset : g.presets) {
    for (auto n : g.windows) {
      const auto window = SiteWindow::centered(n);
      KernelSpec ks;
      ks.preset = preset;
      ks.alpha = g.alpha;
      ks.epsilon = g.epsilon;
      ks.env_seed = g.env_seed;
      const auto kernel = build_kernel(ks, window);
      const auto partition = Partition::split_at(window, 0);
      for (const auto& ic : g.initials) {
        const auto eta = ic == "step" ? step_configuration(window, partition)
                                      : product_configuration(window, g.rho, g.ic_seed);
        for (double t : g.times) {
          std::string label = preset + "/n=" + std::to_string(n) + "/" + ic + "/t=";
          std::ostringstream ts;
          ts << t;
          label += ts.str();
          out.push_back(GridInstance{label, kernel, eta, partition, t});
        }
      }
    }
  }
  return out;
}

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> suites{"identities", "rayleigh", "na", "clt", "all"};
  return suites;
}

namespace {

class Ledger {
 public:
  Ledger(std::string suite, std::string instance) : suite_(std::move(suite)), instance_(std::move(instance)) {}

  /// Records `lhs <= rhs`; `tolerance` is informational.
  void check(const std::string& name, double lhs, double rhs, double tolerance, json& failures,
             std::size_t& checks, std::size_t& failed) {
    ++checks;
    if (lhs <= rhs && std::isfinite(lhs)) return;
    ++failed;
    failures.push_back({{"suite", suite_},
                        {"instance", instance_},
                        {"check", name},
                        {"lhs", lhs},
                        {"rhs", rhs},
                        {"tolerance", tolerance}});
  }

 private:
  std::string suite_;
  std::string instance_;
};

struct SuiteState {
  std::size_t checks = 0;
  std::size_t failed = 0;
  json failures = json::array();
  json warnings = json::array();
};

std::vector<Site> sites_of(const SiteWindow& window, std::uint32_t mask) {
  std::vector<Site> out;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (mask & (1u << i)) out.push_back(window.site(i));
  }
  return out;
}

void suite_identities(const GridInstance& g, SuiteState& s) {
  Ledger l("identities", g.label);
  const auto id = variance_identity(g.kernel, g.eta, g.t, 1e-9, 1e-12);
  const double tol = std::max(1e-6, 1e-4 * id.lhs);
  l.check("variance_identity", id.abs_err(), tol, tol, s.failures, s.checks, s.failed);

  const auto full = full_law(g.kernel, g.eta, g.t, kDefaultFullLawSites, 1e-12);
  const auto law = current_law(full, g.partition);
  const double v = variance_current_exact(g.kernel, g.eta, g.partition, g.t, 1e-12);
  l.check("variance_vs_full_law", std::abs(v - law.variance()), 1e-8, 1e-8, s.failures, s.checks, s.failed);
  const double m = expected_current(g.kernel, g.eta, g.partition, g.t, 1e-12);
  l.check("mean_vs_full_law", std::abs(m - law.mean()), 1e-8, 1e-8, s.failures, s.checks, s.failed);
  const double lb = lower_bound(g.kernel, g.eta, g.partition, g.t, 1e-9, 1e-12);
  l.check("lower_bound", lb, 4.0 * v + 1e-8, 1e-8, s.failures, s.checks, s.failed);
}

void suite_rayleigh(const GridInstance& g, SuiteState& s) {
  Ledger l("rayleigh", g.label);
  const auto full = full_law(g.kernel, g.eta, g.t, kDefaultFullLawSites, 1e-12);
  const auto law = current_law(full, g.partition);
  const auto poly = genpoly_from_sumlaw(law);
  if (poly.degree() < 1) return;
  const auto cert = certify_real_rooted(poly);
  const double slack = kDefaultTolIm * cert.root_scale;
  l.check("max_imaginary_part", cert.max_im, slack, kDefaultTolIm, s.failures, s.checks, s.failed);
  l.check("max_real_part", cert.max_re, slack, kDefaultTolIm, s.failures, s.checks, s.failed);
  if (!cert.ok) return;
  const auto dec = bernoulli_decompose(poly);
  l.check("reconstruction_residual", dec.residual, 1e-8, 1e-8, s.failures, s.checks, s.failed);
  l.check("variance_match", std::abs(dec.variance - law.variance()), 1e-6, 1e-6, s.failures, s.checks,
          s.failed);
}

void suite_na(const GridInstance& g, SuiteState& s) {
  Ledger l("na", g.label);
  const std::size_t n = g.kernel.size();
  const auto cov = covariance_matrix(g.kernel, g.eta, g.t, 1e-12);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      l.check("covariance(" + std::to_string(g.kernel.window().site(x)) + "," +
                  std::to_string(g.kernel.window().site(y)) + ")",
              cov[x * n + y], 1e-12, 1e-12, s.failures, s.checks, s.failed);
    }
  }

  const auto full = full_law(g.kernel, g.eta, g.t, kDefaultFullLawSites, 1e-12);
  const std::uint32_t all = (1u << n) - 1;
  // Every ordered pair of disjoint nonempty sets, A below B in mask order.
  for (std::uint32_t a = 1; a <= all; ++a) {
    const std::uint32_t rest = all & ~a;
    for (std::uint32_t b = rest; b > 0; b = (b - 1) & rest) {
      if (b < a) continue;
      const auto chk = andjel_check(full, sites_of(full.window, a), sites_of(full.window, b));
      l.check("andjel", chk.lhs, chk.rhs + 1e-10, 1e-10, s.failures, s.checks, s.failed);
    }
  }
  // Threshold indicators on disjoint sets of at most two sites.
  for (std::uint32_t a = 1; a <= all; ++a) {
    if (std::popcount(a) > 2) continue;
    const std::uint32_t rest = all & ~a;
    for (std::uint32_t b = rest; b > 0; b = (b - 1) & rest) {
      if (std::popcount(b) > 2 || b < a) continue;
      for (int ta = 1; ta <= std::popcount(a); ++ta) {
        for (int tb = 1; tb <= std::popcount(b); ++tb) {
          const auto chk = negative_association_check(
              full, {sites_of(full.window, a), static_cast<std::size_t>(ta)},
              {sites_of(full.window, b), static_cast<std::size_t>(tb)});
          l.check("negative_association", chk.lhs, chk.rhs + 1e-10, 1e-10, s.failures, s.checks,
                  s.failed);
        }
      }
    }
  }
  for (std::uint32_t a = 1; a <= all; ++a) {
    if (std::popcount(a) < 2) continue;
    const auto chk = product_moment_check(full, sites_of(full.window, a));
    l.check("product_moment", chk.lhs, chk.rhs + 1e-10, 1e-10, s.failures, s.checks, s.failed);
  }
}

void suite_clt(const GridInstance& g, SuiteState& s) {
  Ledger l("clt", g.label);
  const auto full = full_law(g.kernel, g.eta, g.t, kDefaultFullLawSites, 1e-12);
  const auto law = current_law(full, g.partition);
  if (!(law.variance() > 0.0)) return;
  const auto poly = genpoly_from_sumlaw(law);
  const auto cert = certify_real_rooted(poly);
  if (!cert.ok) return;  // reported by the rayleigh suite
  const auto dec = bernoulli_decompose(poly);
  if (!(dec.variance > 0.0)) return;
  const double rate = esseen_rate(dec);
  const auto report = normality_report(law, rate);
  // Berry-Esseen for independent Bernoulli summands; 1e-6 covers the normal
  // CDF approximation error.
  l.check("berry_esseen", report.ks_distance, kEsseenConstant * rate + 1e-6, 1e-6, s.failures,
          s.checks, s.failed);
  l.check("levy_below_ks", report.levy_distance, report.ks_distance + 1e-6, 1e-6, s.failures,
          s.checks, s.failed);
}

}  // namespace

VerifyOutcome verify(const std::string& suite, const PresetGrid& grid) {
  const auto& names = verify_suites();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw SepError("unknown suite '" + suite + "' (expected one of: " + list + ")");
  }
  SuiteState s;
  const auto instances = grid_instances(grid);
  if (instances.empty()) s.warnings.push_back("preset grid is empty; nothing was checked");

  const bool all = suite == "all";
  for (const auto& inst : instances) {
    if (all || suite == "identities") suite_identities(inst, s);
    if (all || suite == "rayleigh") suite_rayleigh(inst, s);
    if (all || suite == "na") suite_na(inst, s);
    if (all || suite == "clt") suite_clt(inst, s);
  }

  VerifyOutcome out;
  out.checks = s.checks;
  out.failed = s.failed;
  out.manifest = {{"schema_version", kSchemaVersion},
                  {"suite", suite},
                  {"grid", grid_to_json(grid)},
                  {"instances", instances.size()},
                  {"checks", s.checks},
                  {"failed", s.failed},
                  {"failures", s.failures},
                  {"warnings", s.warnings}};
  return out;
}

}  // namespace sep
