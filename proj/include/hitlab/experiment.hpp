#pragma once

/// \file experiment.hpp
/// Batch experiments: flat `key = value` configs, validation, and result
/// artifacts (CSV tables with `#` metadata lines, JSON manifests).
///
/// CSV tables contain only seed- and config-determined numbers, so a re-run
/// from a manifest reproduces them byte for byte under any worker count.
/// Wall time and the worker count live in the manifest only.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hitlab/covariance.hpp"
#include "hitlab/hitting.hpp"
#include "hitlab/kernels.hpp"
#include "hitlab/ou.hpp"
#include "hitlab/potential.hpp"
#include "hitlab/regularity.hpp"

namespace hitlab {

inline constexpr const char* code_version = "hitlab 1.0.0";
inline constexpr const char* output_dir_env = "HITLAB_OUT_DIR";

/// Every recognised key with its default. Empty defaults are computed.
inline const std::map<std::string, std::string>& config_schema()
{
  static const std::map<std::string, std::string> schema = {
      {"experiment", ""},
      {"spec.kind", "exact"},
      {"spec.size", "2000"},
      {"spec.modes", "2000"},
      {"spec.T", "1"},
      {"field.d", "1"},
      {"window.axis", "time"},
      {"window.t0", "0.5"},
      {"window.t1", ""},
      {"window.eps", "0.1"},
      {"window.x", "0.5"},
      {"window.t", ""},
      {"window.resolution", "4096"},
      {"fit.direction", "time"},
      {"fit.anchor_t", ""},
      {"fit.anchor_x", "0.5"},
      {"fit.lags", ""},
      {"target.center", ""},
      {"target.radius", "0.05"},
      {"target.radii", "0.2,0.1,0.05,0.025"},
      {"mc.n_paths", "10000"},
      {"mc.seed", "1"},
      {"mc.workers", "1"},
      {"mc.doubling", "true"},
      {"mc.ci", "wilson"},
      {"potential.beta", "0.5"},
      {"potential.set", "ball"},
      {"potential.dim", "3"},
      {"potential.radii", "1,0.5,0.25,0.125"},
      {"potential.length", "1"},
      {"potential.samples", "1000000"},
      {"ou.lambda", "1"},
      {"ou.dt", "0.05"},
      {"ou.schemes", "exact,em-continuous"},
      {"demo.exact_modes", "2000"},
      {"demo.sgm_n", "16"},
      {"output.dir", ""},
  };
  return schema;
}

inline const std::vector<std::string>& experiment_names()
{
  static const std::vector<std::string> names = {
      "holder", "condvar", "hitprob", "scaling", "capacity", "ou", "critical-dim-demo"};
  return names;
}

namespace detail {

inline std::string trim(const std::string& s)
{
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::string fmt(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parsed configuration. Syntax problems and unknown keys are kept as
/// errors and reported by `validate`.
class ExperimentConfig
{
 public:
  static ExperimentConfig parse(std::istream& in)
  {
    ExperimentConfig c;
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        c.errors_.push_back("line " + std::to_string(no) + ": expected 'key = value'");
        continue;
      }
      c.set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), no);
    }
    return c;
  }

  static ExperimentConfig parse_string(const std::string& text)
  {
    std::istringstream in(text);
    return parse(in);
  }

  /// Reads a flat config, or the `config` object of a JSON manifest.
  static ExperimentConfig load(const std::filesystem::path& path)
  {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    if (path.extension() == ".json") {
      const auto j = nlohmann::json::parse(in);
      ExperimentConfig c;
      for (const auto& [k, v] : j.at("config").items()) c.set(k, v.get<std::string>(), 0);
      return c;
    }
    return parse(in);
  }

  void set(const std::string& key, const std::string& value, int line = 0)
  {
    const std::string where = line > 0 ? "line " + std::to_string(line) + ": " : "";
    if (!config_schema().contains(key)) {
      errors_.push_back(where + "unknown key '" + key + "'");
      return;
    }
    values_[key] = value;
  }

  /// True if the key was given a non-empty value.
  bool has(const std::string& key) const
  {
    const auto it = values_.find(key);
    return it != values_.end() && !it->second.empty();
  }

  std::string str(const std::string& key) const
  {
    if (auto it = values_.find(key); it != values_.end()) return it->second;
    return config_schema().at(key);
  }

  const std::vector<std::string>& syntax_errors() const { return errors_; }

  /// All keys with effective values (defaults filled in).
  std::map<std::string, std::string> effective() const
  {
    std::map<std::string, std::string> out;
    for (const auto& [k, def] : config_schema())
      if (!str(k).empty()) out[k] = str(k);
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> errors_;
};

/// Typed view of a config; conversion failures are collected, not thrown.
class ConfigReader
{
 public:
  explicit ConfigReader(const ExperimentConfig& c) : c_(c) {}

  std::vector<std::string> errors;

  std::string str(const std::string& key) const { return c_.str(key); }

  double real(const std::string& key, double fallback = 0.0)
  {
    const std::string s = c_.str(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos == s.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    errors.push_back(key + ": expected a finite number, got '" + s + "'");
    return fallback;
  }

  long long integer(const std::string& key, long long fallback = 0)
  {
    const std::string s = c_.str(key);
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    errors.push_back(key + ": expected an integer, got '" + s + "'");
    return fallback;
  }

  bool boolean(const std::string& key)
  {
    const std::string s = c_.str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    errors.push_back(key + ": expected true or false, got '" + s + "'");
    return false;
  }

  std::vector<double> reals(const std::string& key)
  {
    std::vector<double> out;
    std::stringstream ss(c_.str(key));
    for (std::string item; std::getline(ss, item, ',');) {
      item = detail::trim(item);
      if (item.empty()) continue;
      try {
        std::size_t pos = 0;
        const double v = std::stod(item, &pos);
        if (pos == item.size() && std::isfinite(v)) {
          out.push_back(v);
          continue;
        }
      } catch (const std::exception&) {
      }
      errors.push_back(key + ": '" + item + "' is not a number");
    }
    return out;
  }

  std::vector<std::string> words(const std::string& key) const
  {
    std::vector<std::string> out;
    std::stringstream ss(c_.str(key));
    for (std::string item; std::getline(ss, item, ',');)
      if (!(item = detail::trim(item)).empty()) out.push_back(item);
    return out;
  }

 private:
  const ExperimentConfig& c_;
};

/// Everything an experiment needs, resolved from a config.
struct ExperimentPlan
{
  std::string experiment;
  DiscretizationSpec spec;
  int d = 1;
  Window window;
  Axis fit_axis = Axis::time;
  FitWindow fit_window;
  SpaceTimePoint anchor;
  std::vector<double> lags;
  std::vector<double> center;
  double radius = 0.05;
  std::vector<double> radii;
  McOptions mc;
  std::vector<double> betas;
  std::string set_kind;
  int set_dim = 3;
  std::vector<double> set_radii;
  double set_length = 1.0;
  std::int64_t set_samples = 1000000;
  OuSpec ou;
  std::vector<OuScheme> ou_schemes;
  int demo_modes = 2000;
  int demo_sgm_n = 16;
};

namespace detail {

inline Axis axis_from(const std::string& s, std::vector<std::string>& errors, const std::string& key)
{
  if (s == "time") return Axis::time;
  if (s == "space") return Axis::space;
  errors.push_back(key + ": expected 'time' or 'space', got '" + s + "'");
  return Axis::time;
}

template <class F>
void guard(std::vector<std::string>& errors, const std::string& key, F&& f)
{
  try {
    f();
  } catch (const std::exception& e) {
    errors.push_back(key + ": " + e.what());
  }
}

}  // namespace detail

/// Resolves and checks every precondition without computing anything.
/// `errors` receives one field-level message per violated invariant.
inline ExperimentPlan plan_experiment(const ExperimentConfig& config,
                                      std::vector<std::string>& errors)
{
  errors = config.syntax_errors();
  ConfigReader r(config);
  ExperimentPlan p;

  p.experiment = r.str("experiment");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), p.experiment) == names.end())
    errors.push_back("experiment: expected one of holder, condvar, hitprob, scaling, capacity, "
                     "ou, critical-dim-demo; got '" + p.experiment + "'");

  const double horizon = r.real("spec.T", 1.0);
  const auto size = static_cast<int>(r.integer("spec.size", 2));
  const auto modes = static_cast<int>(r.integer("spec.modes", 1));
  detail::guard(errors, "spec", [&] {
    const Scheme kind = scheme_from_string(r.str("spec.kind"));
    switch (kind) {
      case Scheme::exact: p.spec = DiscretizationSpec::exact(size, horizon); break;
      case Scheme::sgm: p.spec = DiscretizationSpec::sgm(size, horizon); break;
      case Scheme::fdm: p.spec = DiscretizationSpec::fdm(size, horizon); break;
      case Scheme::eem_grid: p.spec = DiscretizationSpec::eem_grid(size, horizon, modes); break;
      case Scheme::eem_continuous:
        p.spec = DiscretizationSpec::eem_continuous(size, horizon, modes);
        break;
    }
  });

  p.d = static_cast<int>(r.integer("field.d", 1));
  if (p.d < 1) errors.push_back("field.d: dimension must be >= 1");

  // window
  const Axis waxis = detail::axis_from(r.str("window.axis"), errors, "window.axis");
  const double eps = r.real("window.eps", 0.1);
  const double t0 = r.real("window.t0", 0.5);
  const double t1 = config.has("window.t1") ? r.real("window.t1", horizon) : horizon;
  const double wt = config.has("window.t") ? r.real("window.t", horizon) : horizon;
  const auto res = static_cast<int>(r.integer("window.resolution", 4096));
  if (!(eps > 0.0 && eps < 0.5)) errors.push_back("window.eps: need 0 < eps < 1/2");
  if (!(t0 > 0.0)) errors.push_back("window.t0: need T0 > 0");
  p.window = waxis == Axis::time ? Window::time_section(r.real("window.x", 0.5), t0, t1, res)
                                 : Window::space_section(wt, eps, res);

  // fit probes
  p.fit_axis = detail::axis_from(r.str("fit.direction"), errors, "fit.direction");
  p.anchor = {config.has("fit.anchor_t") ? r.real("fit.anchor_t", horizon) : horizon,
              r.real("fit.anchor_x", 0.5)};
  p.lags = r.reals("fit.lags");
  p.fit_window = {t0, eps};

  // target and MC
  p.center = r.reals("target.center");
  if (!config.has("target.center")) p.center.assign(std::max(p.d, 1), 0.0);
  p.radius = r.real("target.radius", 0.05);
  p.radii = r.reals("target.radii");
  p.mc.n_paths = r.integer("mc.n_paths", 10000);
  p.mc.seed = static_cast<std::uint64_t>(r.integer("mc.seed", 1));
  p.mc.workers = static_cast<int>(r.integer("mc.workers", 1));
  p.mc.doubling_check = r.boolean("mc.doubling");
  const std::string ci = r.str("mc.ci");
  if (ci == "wilson") p.mc.ci = CiMethod::wilson;
  else if (ci == "clopper-pearson") p.mc.ci = CiMethod::clopper_pearson;
  else errors.push_back("mc.ci: expected 'wilson' or 'clopper-pearson'");

  // potential theory
  p.betas = r.reals("potential.beta");
  p.set_kind = r.str("potential.set");
  p.set_dim = static_cast<int>(r.integer("potential.dim", 3));
  p.set_radii = r.reals("potential.radii");
  p.set_length = r.real("potential.length", 1.0);
  p.set_samples = r.integer("potential.samples", 1000000);

  // OU
  p.ou.lambda = r.real("ou.lambda", 1.0);
  p.ou.dt = r.real("ou.dt", 0.05);
  p.ou.t0 = t0;
  p.ou.horizon = t1;
  for (const auto& w : r.words("ou.schemes"))
    detail::guard(errors, "ou.schemes", [&] { p.ou_schemes.push_back(ou_scheme_from_string(w)); });

  p.demo_modes = static_cast<int>(r.integer("demo.exact_modes", 2000));
  p.demo_sgm_n = static_cast<int>(r.integer("demo.sgm_n", 16));
  errors.insert(errors.end(), r.errors.begin(), r.errors.end());
  if (!errors.empty()) return p;

  // experiment-specific preconditions
  const std::string& e = p.experiment;
  auto check_mc = [&] {
    if (p.mc.n_paths < 100) errors.push_back("mc.n_paths: need at least 100 paths");
    if (p.mc.workers < 1) errors.push_back("mc.workers: need at least one worker");
    if (static_cast<int>(p.center.size()) != p.d)
      errors.push_back("target.center: needs exactly field.d coordinates");
  };
  auto check_radii = [&](const std::string& key, const std::vector<double>& radii) {
    detail::guard(errors, key, [&] { check_radius_ladder(radii); });
  };

  if (e == "holder" || e == "condvar") {
    if (p.lags.empty()) detail::guard(errors, "fit.lags", [&] { p.lags = default_lags(p.spec, p.fit_axis); });
    detail::guard(errors, "fit.lags", [&] {
      detail::check_ladder(p.lags);
      for (double h : p.lags) detail::partner(p.spec, p.fit_axis, p.anchor, h, p.fit_window);
    });
    detail::guard(errors, "fit.anchor_t", [&] { check_query_point(p.spec, p.anchor); });
  } else if (e == "hitprob" || e == "scaling") {
    detail::guard(errors, waxis == Axis::time ? "window.x" : "window.t",
                  [&] { p.window.validate(p.spec); });
    check_mc();
    if (e == "hitprob" && !(p.radius >= 0.0)) errors.push_back("target.radius: radius must be >= 0");
    if (e == "scaling") check_radii("target.radii", p.radii);
  } else if (e == "critical-dim-demo") {
    detail::guard(errors, "demo", [&] {
      DiscretizationSpec::exact(p.demo_modes, horizon);
      const auto sgm = DiscretizationSpec::sgm(p.demo_sgm_n, horizon);
      p.window.validate(sgm);
    });
    if (waxis != Axis::time) errors.push_back("window.axis: the demo compares time sections");
    check_mc();
    check_radii("target.radii", p.radii);
  } else if (e == "capacity") {
    if (p.betas.empty()) errors.push_back("potential.beta: need at least one order");
    if (p.set_kind != "ball" && p.set_kind != "segment" && p.set_kind != "point")
      errors.push_back("potential.set: expected ball, segment or point");
    if (p.set_dim < 1) errors.push_back("potential.dim: need dimension >= 1");
    if (p.set_kind == "ball") {
      check_radii("potential.radii", p.set_radii);
      if (p.set_samples < 2) errors.push_back("potential.samples: need >= 2 pairs");
    }
    if (p.set_kind == "segment" && !(p.set_length > 0.0))
      errors.push_back("potential.length: segment length must be > 0");
  } else if (e == "ou") {
    detail::guard(errors, "ou", [&] { p.ou.validate(); });
    if (p.ou_schemes.empty()) errors.push_back("ou.schemes: need at least one scheme");
    if (res < 2 || (res & (res - 1)) != 0)
      errors.push_back("window.resolution: resolution must be a power of two >= 2");
    check_mc();
    check_radii("target.radii", p.radii);
  }
  return p;
}

inline std::vector<std::string> validate(const ExperimentConfig& config)
{
  std::vector<std::string> errors;
  plan_experiment(config, errors);
  return errors;
}

/// Command-line overrides of config values.
struct RunOverrides
{
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
};

struct ResultRecord
{
  nlohmann::json manifest;
  std::filesystem::path directory;
  std::vector<std::filesystem::path> tables;
};

class validation_error : public std::invalid_argument
{
 public:
  explicit validation_error(std::vector<std::string> errors)
      : std::invalid_argument(join(errors)), errors_(std::move(errors))
  {
  }
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& e)
  {
    std::string s;
    for (const auto& m : e) s += (s.empty() ? "" : "; ") + m;
    return s;
  }
  std::vector<std::string> errors_;
};

namespace detail {

/// CSV writer: `# key=value` metadata lines, a header, LF line endings.
class CsvTable
{
 public:
  CsvTable(std::vector<std::pair<std::string, std::string>> meta, std::vector<std::string> header)
      : meta_(std::move(meta)), header_(std::move(header))
  {
  }

  void row(const std::vector<std::string>& cells) { rows_.push_back(cells); }

  void write(const std::filesystem::path& path) const
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& [k, v] : meta_) out << "# " << k << '=' << v << '\n';
    line(out, header_);
    for (const auto& r : rows_) line(out, r);
  }

 private:
  static void line(std::ostream& out, const std::vector<std::string>& cells)
  {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  }

  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::vector<std::string> estimate_cells(double radius, const HitEstimate& e)
{
  return {fmt(radius),
          fmt(e.p_hat),
          fmt(e.ci_low),
          fmt(e.ci_high),
          std::to_string(e.n_trials),
          std::to_string(e.resolution),
          e.p_doubled ? fmt(*e.p_doubled) : "",
          e.p_doubled ? (e.converged ? "1" : "0") : ""};
}

inline const std::vector<std::string> hit_header = {
    "radius", "p_hat", "ci_low", "ci_high", "n", "resolution", "p_doubled", "converged"};

inline nlohmann::json scaling_json(const ScalingResult& s)
{
  return {{"slope", s.slope},
          {"intercept", s.intercept},
          {"fitted_points", s.fitted_points},
          {"route", s.route},
          {"converged", s.converged()}};
}

inline nlohmann::json fit_json(const HolderFit& f)
{
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"max_residual", f.max_residual},
          {"expected_slope", f.expected_slope},
          {"floor_ratio", f.floor_ratio},
          {"ceiling_ratio", f.ceiling_ratio}};
}

}  // namespace detail

inline std::filesystem::path default_output_dir()
{
  if (const char* env = std::getenv(output_dir_env); env && *env) return env;
  return "results";
}

/// Runs a validated experiment and writes its tables and `manifest.json`.
inline ResultRecord run(ExperimentConfig config, const RunOverrides& overrides = {})
{
  if (overrides.seed) config.set("mc.seed", std::to_string(*overrides.seed));
  if (overrides.workers) config.set("mc.workers", std::to_string(*overrides.workers));
  if (overrides.out_dir) config.set("output.dir", *overrides.out_dir);

  std::vector<std::string> errors;
  ExperimentPlan p = plan_experiment(config, errors);
  if (!errors.empty()) throw validation_error(errors);

  const auto start = std::chrono::steady_clock::now();
  ResultRecord rec;
  rec.directory = config.str("output.dir").empty() ? default_output_dir()
                                                   : std::filesystem::path(config.str("output.dir"));
  std::filesystem::create_directories(rec.directory);

  // the worker count is an execution detail: it never enters a table
  auto echo = config.effective();
  echo.erase("mc.workers");
  echo.erase("output.dir");
  std::vector<std::pair<std::string, std::string>> meta = {
      {"experiment", p.experiment}, {"seed", std::to_string(p.mc.seed)}};
  if (p.experiment != "capacity" && p.experiment != "ou" && p.experiment != "critical-dim-demo")
    meta.emplace_back("spec", p.spec.describe());

  nlohmann::json results;
  bool converged = true;
  auto emit = [&](const detail::CsvTable& t, const std::string& name) {
    const auto path = rec.directory / name;
    t.write(path);
    rec.tables.push_back(path);
  };

  const std::string& e = p.experiment;
  if (e == "holder" || e == "condvar") {
    const CovarianceModel model(p.spec);
    detail::CsvTable t(meta, {"lag", "msq", "condvar"});
    std::vector<double> msq, cv;
    for (double h : p.lags) {
      const auto q = detail::partner(p.spec, p.fit_axis, p.anchor, h, p.fit_window);
      msq.push_back(model.increment_msq(p.anchor, q));
      cv.push_back(model.cond_var_residual(p.anchor, q));
      t.row({detail::fmt(h), detail::fmt(msq.back()), detail::fmt(cv.back())});
    }
    emit(t, e + ".csv");
    const double expected = expected_slope(p.spec.kind, p.fit_axis);
    results["fit"] = detail::fit_json(detail::fit_values(p.lags, e == "holder" ? msq : cv, expected));
    results["direction"] = to_string(p.fit_axis);
  } else if (e == "hitprob") {
    std::vector<double> center = p.center;
    const HitEstimate est = mc_hit_prob(p.spec, p.window, HitTarget::ball(center, p.radius), p.d, p.mc);
    detail::CsvTable t(meta, detail::hit_header);
    t.row(detail::estimate_cells(p.radius, est));
    emit(t, "hitprob.csv");
    converged = est.converged;
    results["p_hat"] = est.p_hat;
  } else if (e == "scaling") {
    const auto s = hit_scaling(p.spec, p.window, p.center, p.radii, p.d, p.mc);
    detail::CsvTable t(meta, detail::hit_header);
    for (std::size_t i = 0; i < s.radii.size(); ++i) t.row(detail::estimate_cells(s.radii[i], s.rows[i]));
    emit(t, "scaling.csv");
    converged = s.converged();
    results["scaling"] = detail::scaling_json(s);
  } else if (e == "critical-dim-demo") {
    const auto exact = DiscretizationSpec::exact(p.demo_modes, p.spec.horizon);
    const auto sgm = DiscretizationSpec::sgm(p.demo_sgm_n, p.spec.horizon);
    for (const auto& spec : {exact, sgm}) {
      const auto s = hit_scaling(spec, p.window, p.center, p.radii, p.d, p.mc);
      auto m = meta;
      m.emplace_back("spec", spec.describe());
      detail::CsvTable t(m, detail::hit_header);
      for (std::size_t i = 0; i < s.radii.size(); ++i) t.row(detail::estimate_cells(s.radii[i], s.rows[i]));
      const std::string name = spec.kind == Scheme::exact ? "exact" : "sgm";
      emit(t, "scaling_" + name + ".csv");
      converged = converged && s.converged();
      const auto q = critical_dimension(field_kind(spec.kind), Axis::time);
      results[name] = detail::scaling_json(s);
      results[name]["critical_dimension"] = q.q;
      results[name]["verdict"] = to_string(polarity_verdict(p.d, q.q));
    }
    nlohmann::json verdict = {{"exact", results["exact"]["verdict"]},
                              {"sgm", results["sgm"]["verdict"]}};
    std::ofstream(rec.directory / "verdict.json") << verdict.dump(2) << '\n';
    results["verdict"] = verdict;
  } else if (e == "capacity") {
    detail::CsvTable t({{"experiment", e}, {"seed", std::to_string(p.mc.seed)}},
                       {"beta", "set", "size", "energy", "capacity_lower_bound", "error", "method"});
    std::vector<double> sizes =
        p.set_kind == "ball" ? p.set_radii : std::vector<double>{p.set_length};
    for (double beta : p.betas) {
      std::vector<double> lx, ly;
      for (double s : sizes) {
        SetDescriptor set = SetDescriptor::point(std::vector<double>(p.set_dim, 0.0));
        if (p.set_kind == "ball") set = SetDescriptor::ball(std::vector<double>(p.set_dim, 0.0), s);
        if (p.set_kind == "segment") {
          std::vector<double> b(p.set_dim, 0.0);
          b[0] = s;
          set = SetDescriptor::segment(std::vector<double>(p.set_dim, 0.0), b);
        }
        const auto en = energy(beta, set, p.set_samples, p.mc.seed);
        t.row({detail::fmt(beta), p.set_kind, detail::fmt(s), detail::fmt(en.value),
               detail::fmt(en.capacity_lower_bound), detail::fmt(en.error_estimate),
               to_string(en.method)});
        if (std::isfinite(en.value) && en.value > 0.0) {
          lx.push_back(std::log(s));
          ly.push_back(std::log(en.value));
        }
      }
      if (lx.size() >= 2) results["energy_slope"][detail::fmt(beta)] = least_squares(lx, ly).slope;
    }
    emit(t, "capacity.csv");
  } else if (e == "ou") {
    for (OuScheme scheme : p.ou_schemes) {
      OuSpec spec = p.ou;
      spec.scheme = scheme;
      const auto s = ou_hit_scaling(spec, p.center, p.radii, p.d, p.mc, p.window.resolution);
      auto m = meta;
      m.emplace_back("ou", std::string(to_string(scheme)) + "(lambda=" + detail::fmt(spec.lambda) +
                               ",dt=" + detail::fmt(spec.dt) + ",T0=" + detail::fmt(spec.t0) +
                               ",T=" + detail::fmt(spec.horizon) + ")");
      detail::CsvTable t(m, detail::hit_header);
      for (std::size_t i = 0; i < s.radii.size(); ++i) t.row(detail::estimate_cells(s.radii[i], s.rows[i]));
      emit(t, std::string("ou_") + to_string(scheme) + ".csv");
      converged = converged && s.converged();
      results[to_string(scheme)] = detail::scaling_json(s);
    }
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::json cfg(echo);
  rec.manifest = {{"code_version", code_version},
                  {"config", cfg},
                  {"seed", p.mc.seed},
                  {"workers", p.mc.workers},
                  {"wall_time_s", wall},
                  {"converged", converged},
                  {"results", results}};
  if (!converged) rec.manifest["flags"] = {"unconverged"};
  if (p.spec.truncated() && e != "capacity" && e != "ou")
    rec.manifest["truncation_tail_bound"] = truncation_tail_bound(p.spec);
  for (const auto& path : rec.tables) rec.manifest["tables"].push_back(path.filename().string());
  std::ofstream(rec.directory / "manifest.json") << rec.manifest.dump(2) << '\n';
  return rec;
}

}  // namespace hitlab
