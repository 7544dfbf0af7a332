#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmf/csv.hpp"
#include "cmf/evaluation.hpp"
#include "cmf/filter_design.hpp"
#include "cmf/simulation.hpp"
#include "cmf/svg.hpp"
#include "cmf/tracker.hpp"

namespace cmf {

inline constexpr const char* kToolVersion = "cmftool 1.0.0";

/// Bad key, bad value or inconsistent settings: the caller's mistake, not a
/// runtime failure.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario { mrwm, batch, tone, replay };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::mrwm: return "mrwm";
    case Scenario::batch: return "batch";
    case Scenario::tone: return "tone";
    case Scenario::replay: return "replay";
  }
  return "?";
}

struct ExperimentConfig {
  Scenario scenario = Scenario::mrwm;
  std::string replay_file;
  std::vector<Method> methods{Method::cbf};
  std::optional<std::uint64_t> seed;
  double noise_sigma1_v = 0.0;
  double noise_sigma2_v = 0.0;

  MrwmParams mrwm;  // rate, seed, noise and duration come from the fields here
  double mrwm_duration_s = 60.0;
  BatchParams batch;
  double tone_freq_hz = 92.5;
  double tone_amp_v = 0.1;
  double tone_phase_deg = 2.0;
  double tone_duration_s = 2.0;

  TrackerConfig tracker;  // method and prototypes are filled per run
  std::string cbf_coef_file, cnf_coef_file, cascade_cbf_coef_file, hilbert_taps_file;

  double transient_skip_s = 0.2;
  double delay_max_lag_ms = 60.0;

  std::string design_filter = "cbf";
  int design_grid_points = 2048;

  bool plot = false;
  std::string out_dir;  // not part of the recorded configuration

  /// Tracker settings for one method with coefficient files loaded.
  TrackerConfig tracker_config(Method m) const {
    TrackerConfig t = tracker;
    t.method = m;
    if (!cbf_coef_file.empty()) t.cbf_prototype = load_prototype(cbf_coef_file);
    if (!cnf_coef_file.empty()) t.cnf_prototype = load_prototype(cnf_coef_file);
    if (!cascade_cbf_coef_file.empty()) t.cascade_cbf_prototype = load_prototype(cascade_cbf_coef_file);
    if (!hilbert_taps_file.empty()) t.hilbert_taps = load_prototype(hilbert_taps_file).numerator();
    return t;
  }

  bool uses_randomness() const {
    return scenario == Scenario::mrwm || (scenario != Scenario::replay && (noise_sigma1_v > 0.0 || noise_sigma2_v > 0.0));
  }

  void validate() const {
    if (methods.empty()) throw UsageError("at least one method is required");
    if (scenario == Scenario::replay && replay_file.empty()) throw UsageError("replay scenario needs replay_file");
    if (uses_randomness() && !seed) throw UsageError("scenario '" + std::string(to_string(scenario)) + "' needs a seed");
    if (noise_sigma1_v < 0.0 || noise_sigma2_v < 0.0) throw UsageError("noise sigma must be >= 0");
    if (transient_skip_s < 0.0) throw UsageError("transient_skip_s must be >= 0");
    if (!(delay_max_lag_ms > 0.0)) throw UsageError("delay_max_lag_ms must be positive");
    if (design_grid_points < 8) throw UsageError("design.grid_points must be >= 8");
    if (!(mrwm_duration_s > 0.0) || !(tone_duration_s > 0.0)) throw UsageError("durations must be positive");
  }
};

namespace config {

/// Shortest decimal that reads back to the same double.
inline std::string num(double v) {
  char buf[40];
  for (int prec : {15, 16, 17}) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw UsageError(key + ": expected a number, got '" + v + "'");
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw UsageError(key + ": expected an integer, got '" + v + "'");
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError(key + ": expected true/false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  for (const auto& item : csv::split(v))
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

inline std::vector<Method> to_methods(const std::string& key, const std::string& v) {
  std::vector<Method> out;
  for (const auto& name : split_list(v)) {
    try {
      out.push_back(parse_method(name));
    } catch (const Error&) {
      throw UsageError(key + ": unknown method '" + name + "'");
    }
  }
  if (out.empty()) throw UsageError(key + ": empty method list");
  return out;
}

struct Setting {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;  // empty for aliases
};

using DoubleRef = std::function<double&(ExperimentConfig&)>;

inline Setting real(const char* key, DoubleRef ref) {
  return {key, [key, ref](ExperimentConfig& c, const std::string& v) { ref(c) = to_double(key, v); },
          [ref](const ExperimentConfig& c) { return num(ref(const_cast<ExperimentConfig&>(c))); }};
}

inline Setting text(const char* key, std::function<std::string&(ExperimentConfig&)> ref) {
  return {key, [ref](ExperimentConfig& c, const std::string& v) { ref(c) = v; },
          [ref](const ExperimentConfig& c) { return ref(const_cast<ExperimentConfig&>(c)); }};
}

inline Setting flag(const char* key, std::function<bool&(ExperimentConfig&)> ref) {
  return {key, [key, ref](ExperimentConfig& c, const std::string& v) { ref(c) = to_bool(key, v); },
          [ref](const ExperimentConfig& c) { return std::string(ref(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); }};
}

template <typename Int>
Setting integer(const char* key, std::function<Int&(ExperimentConfig&)> ref, long long lo) {
  return {key,
          [key, ref, lo](ExperimentConfig& c, const std::string& v) {
            const auto i = to_int(key, v);
            if (i < lo) throw UsageError(std::string(key) + ": must be >= " + std::to_string(lo));
            ref(c) = static_cast<Int>(i);
          },
          [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); }};
}

/// Every configuration key, in the order it is recorded in output headers.
inline const std::vector<Setting>& settings() {
  using C = ExperimentConfig;
  static const std::vector<Setting> table = [] {
    std::vector<Setting> s;
    s.push_back({"scenario",
                 [](C& c, const std::string& v) {
                   for (Scenario sc : {Scenario::mrwm, Scenario::batch, Scenario::tone, Scenario::replay})
                     if (v == to_string(sc)) {
                       c.scenario = sc;
                       return;
                     }
                   throw UsageError("scenario: expected mrwm, batch, tone or replay, got '" + v + "'");
                 },
                 [](const C& c) { return std::string(to_string(c.scenario)); }});
    s.push_back(text("replay_file", [](C& c) -> std::string& { return c.replay_file; }));
    s.push_back({"methods", [](C& c, const std::string& v) { c.methods = to_methods("methods", v); },
                 [](const C& c) {
                   std::string out;
                   for (auto m : c.methods) out += (out.empty() ? "" : ",") + std::string(to_string(m));
                   return out;
                 }});
    s.push_back({"seed",
                 [](C& c, const std::string& v) {
                   try {
                     std::size_t used = 0;
                     const auto x = std::stoull(v, &used);
                     if (used == v.size() && v.find('-') == std::string::npos) {
                       c.seed = x;
                       return;
                     }
                   } catch (const std::exception&) {
                   }
                   throw UsageError("seed: expected a nonnegative integer, got '" + v + "'");
                 },
                 [](const C& c) { return c.seed ? std::to_string(*c.seed) : std::string("none"); }});
    s.push_back({"noise_sigma",
                 [](C& c, const std::string& v) { c.noise_sigma1_v = c.noise_sigma2_v = to_double("noise_sigma", v); },
                 {}});
    s.push_back(real("noise_sigma1", [](C& c) -> double& { return c.noise_sigma1_v; }));
    s.push_back(real("noise_sigma2", [](C& c) -> double& { return c.noise_sigma2_v; }));
    s.push_back(real("sample_rate_hz", [](C& c) -> double& { return c.tracker.sample_rate_hz; }));
    s.push_back(real("transient_skip_s", [](C& c) -> double& { return c.transient_skip_s; }));
    s.push_back(real("delay_max_lag_ms", [](C& c) -> double& { return c.delay_max_lag_ms; }));

    s.push_back(real("mrwm.duration_s", [](C& c) -> double& { return c.mrwm_duration_s; }));
    s.push_back(real("mrwm.shaping_cutoff_hz", [](C& c) -> double& { return c.mrwm.shaping_cutoff_hz; }));
    s.push_back(integer<int>("mrwm.shaping_order", [](C& c) -> int& { return c.mrwm.shaping_order; }, 1));
    s.push_back(real("mrwm.amp_min_v", [](C& c) -> double& { return c.mrwm.amp_range.min; }));
    s.push_back(real("mrwm.amp_max_v", [](C& c) -> double& { return c.mrwm.amp_range.max; }));
    s.push_back(real("mrwm.freq_min_hz", [](C& c) -> double& { return c.mrwm.freq_range.min; }));
    s.push_back(real("mrwm.freq_max_hz", [](C& c) -> double& { return c.mrwm.freq_range.max; }));
    s.push_back(real("mrwm.phase_min_deg", [](C& c) -> double& { return c.mrwm.phase_range.min; }));
    s.push_back(real("mrwm.phase_max_deg", [](C& c) -> double& { return c.mrwm.phase_range.max; }));
    s.push_back(integer<std::size_t>("mrwm.burn_in_samples", [](C& c) -> std::size_t& { return c.mrwm.burn_in_samples; }, 0));
    s.push_back({"mrwm.phase_mode",
                 [](C& c, const std::string& v) {
                   if (v == "accumulated") c.mrwm.phase_mode = PhaseMode::accumulated;
                   else if (v == "literal") c.mrwm.phase_mode = PhaseMode::literal;
                   else throw UsageError("mrwm.phase_mode: expected accumulated or literal");
                 },
                 [](const C& c) {
                   return std::string(c.mrwm.phase_mode == PhaseMode::literal ? "literal" : "accumulated");
                 }});

    s.push_back(real("batch.pre_s", [](C& c) -> double& { return c.batch.pre_seconds; }));
    s.push_back(real("batch.ramp_s", [](C& c) -> double& { return c.batch.ramp_seconds; }));
    s.push_back(real("batch.post_s", [](C& c) -> double& { return c.batch.post_seconds; }));
    s.push_back(real("batch.amp_start_v", [](C& c) -> double& { return c.batch.amp_start_v; }));
    s.push_back(real("batch.amp_end_v", [](C& c) -> double& { return c.batch.amp_end_v; }));
    s.push_back(real("batch.freq_start_hz", [](C& c) -> double& { return c.batch.freq_start_hz; }));
    s.push_back(real("batch.freq_end_hz", [](C& c) -> double& { return c.batch.freq_end_hz; }));
    s.push_back(real("batch.phase_start_deg", [](C& c) -> double& { return c.batch.phase_start_deg; }));
    s.push_back(real("batch.phase_end_deg", [](C& c) -> double& { return c.batch.phase_end_deg; }));

    s.push_back(real("tone.freq_hz", [](C& c) -> double& { return c.tone_freq_hz; }));
    s.push_back(real("tone.amp_v", [](C& c) -> double& { return c.tone_amp_v; }));
    s.push_back(real("tone.phase_deg", [](C& c) -> double& { return c.tone_phase_deg; }));
    s.push_back(real("tone.duration_s", [](C& c) -> double& { return c.tone_duration_s; }));

    s.push_back(real("tracker.center_freq_hz", [](C& c) -> double& { return c.tracker.center_freq_hz; }));
    s.push_back(real("tracker.band_min_hz", [](C& c) -> double& { return c.tracker.band_min_hz; }));
    s.push_back(real("tracker.band_max_hz", [](C& c) -> double& { return c.tracker.band_max_hz; }));
    s.push_back(integer<int>("tracker.freq_span_samples", [](C& c) -> int& { return c.tracker.freq_span_samples; }, 1));
    s.push_back({"tracker.warmup_samples",
                 [](C& c, const std::string& v) {
                   if (v == "auto") {
                     c.tracker.warmup_samples.reset();
                     return;
                   }
                   const auto i = to_int("tracker.warmup_samples", v);
                   if (i < 0) throw UsageError("tracker.warmup_samples: must be >= 0 or auto");
                   c.tracker.warmup_samples = static_cast<int>(i);
                 },
                 [](const C& c) {
                   return c.tracker.warmup_samples ? std::to_string(*c.tracker.warmup_samples) : std::string("auto");
                 }});
    s.push_back(flag("tracker.gain_compensation", [](C& c) -> bool& { return c.tracker.gain_compensation; }));
    s.push_back(flag("tracker.factored_sections", [](C& c) -> bool& { return c.tracker.factored_sections; }));
    s.push_back({"tracker.comb_notches_hz",
                 [](C& c, const std::string& v) {
                   c.tracker.comb_notches_hz.clear();
                   for (const auto& item : split_list(v))
                     c.tracker.comb_notches_hz.push_back(to_double("tracker.comb_notches_hz", item));
                 },
                 [](const C& c) {
                   std::string out;
                   for (double f : c.tracker.comb_notches_hz) out += (out.empty() ? "" : ",") + num(f);
                   return out;
                 }});
    s.push_back(text("tracker.cbf_coef_file", [](C& c) -> std::string& { return c.cbf_coef_file; }));
    s.push_back(text("tracker.cnf_coef_file", [](C& c) -> std::string& { return c.cnf_coef_file; }));
    s.push_back(text("tracker.cascade_cbf_coef_file", [](C& c) -> std::string& { return c.cascade_cbf_coef_file; }));
    s.push_back(integer<int>("tracker.hilbert_length", [](C& c) -> int& { return c.tracker.hilbert_length; }, 3));
    s.push_back(text("tracker.hilbert_taps_file", [](C& c) -> std::string& { return c.hilbert_taps_file; }));
    s.push_back(integer<int>("tracker.dtft_window_length", [](C& c) -> int& { return c.tracker.dtft_window_length; }, 4));
    s.push_back({"tracker.dtft_window",
                 [](C& c, const std::string& v) {
                   if (v == "hann") c.tracker.dtft_window = DtftWindow::hann;
                   else if (v == "rectangular" || v == "rect") c.tracker.dtft_window = DtftWindow::rectangular;
                   else throw UsageError("tracker.dtft_window: expected hann or rectangular");
                 },
                 [](const C& c) {
                   return std::string(c.tracker.dtft_window == DtftWindow::hann ? "hann" : "rectangular");
                 }});
    s.push_back(real("tracker.anf_rho", [](C& c) -> double& { return c.tracker.anf.rho; }));
    s.push_back(real("tracker.anf_lambda", [](C& c) -> double& { return c.tracker.anf.lambda; }));
    s.push_back(real("tracker.anf_p0", [](C& c) -> double& { return c.tracker.anf.p0; }));
    s.push_back({"tracker.anf_initial_freq_hz",
                 [](C& c, const std::string& v) {
                   if (v == "auto") c.tracker.anf.initial_freq_hz.reset();
                   else c.tracker.anf.initial_freq_hz = to_double("tracker.anf_initial_freq_hz", v);
                 },
                 [](const C& c) {
                   return c.tracker.anf.initial_freq_hz ? num(*c.tracker.anf.initial_freq_hz) : std::string("auto");
                 }});
    s.push_back(flag("tracker.anf_mean_input", [](C& c) -> bool& { return c.tracker.anf_mean_input; }));

    s.push_back(text("design.filter", [](C& c) -> std::string& { return c.design_filter; }));
    s.push_back(integer<int>("design.grid_points", [](C& c) -> int& { return c.design_grid_points; }, 8));
    s.push_back(flag("plot", [](C& c) -> bool& { return c.plot; }));
    s.push_back({"out_dir", [](C& c, const std::string& v) { c.out_dir = v; }, {}});
    return s;
  }();
  return table;
}

inline bool is_key(const std::string& key) {
  for (const auto& s : settings())
    if (key == s.key) return true;
  return false;
}

}  // namespace config

/// Applies one key = value pair; flags and config files both come through here.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& s : config::settings())
    if (key == s.key) {
      s.set(cfg, config::trim(value));
      return;
    }
  throw UsageError("unknown configuration key '" + key + "'");
}

/// Flat "key = value" text; '#' starts a comment.
inline void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& source = "config") {
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = config::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(source + ":" + std::to_string(no) + ": expected key = value");
    try {
      apply_setting(cfg, config::trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const UsageError& e) {
      throw UsageError(source + ":" + std::to_string(no) + ": " + e.what());
    }
  }
}

inline void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

/// "key = value" for every recorded key.
inline std::vector<std::string> describe(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& s : config::settings())
    if (s.get) out.push_back(std::string(s.key) + " = " + s.get(cfg));
  return out;
}

inline CsvHeader output_header(const ExperimentConfig& cfg, const std::string& what) {
  CsvHeader h{kToolVersion, "output = " + what};
  for (auto& line : describe(cfg)) h.push_back(std::move(line));
  return h;
}

inline std::size_t samples_for(double seconds, double fs) {
  return static_cast<std::size_t>(std::llround(seconds * fs));
}

/// The sensor record for the configured scenario.
inline SensorRecord make_record(const ExperimentConfig& cfg) {
  cfg.validate();
  const double fs = cfg.tracker.sample_rate_hz;
  const std::uint64_t seed = cfg.seed.value_or(0);
  const bool noisy = cfg.noise_sigma1_v > 0.0 || cfg.noise_sigma2_v > 0.0;
  switch (cfg.scenario) {
    case Scenario::mrwm: {
      MrwmParams p = cfg.mrwm;
      p.sample_rate_hz = fs;
      p.duration_samples = samples_for(cfg.mrwm_duration_s, fs);
      p.rng_seed = seed;
      p.noise_sigma1 = cfg.noise_sigma1_v;
      p.noise_sigma2 = cfg.noise_sigma2_v;
      return mrwm_generate(p);
    }
    case Scenario::batch: {
      BatchParams b = cfg.batch;
      b.sample_rate_hz = fs;
      auto rec = batch_generate(b);
      return noisy ? add_noise(std::move(rec), cfg.noise_sigma1_v, cfg.noise_sigma2_v, seed) : rec;
    }
    case Scenario::tone: {
      auto rec = tone_generate(fs, samples_for(cfg.tone_duration_s, fs), cfg.tone_freq_hz, cfg.tone_amp_v,
                               cfg.tone_phase_deg);
      return noisy ? add_noise(std::move(rec), cfg.noise_sigma1_v, cfg.noise_sigma2_v, seed) : rec;
    }
    case Scenario::replay: {
      auto rec = read_record(cfg.replay_file);
      if (rec.truth.sample_rate_hz != fs)
        throw Error(Errc::invalid_argument, "replayed record is at " + config::num(rec.truth.sample_rate_hz) +
                                                " Hz but sample_rate_hz is " + config::num(fs));
      return rec;
    }
  }
  throw Error(Errc::invalid_argument, "unknown scenario");
}

struct MethodRun {
  Method method;
  std::vector<TrackerEstimate> estimates;
  EvaluationReport report;
};

struct ExperimentResult {
  SensorRecord record;
  std::vector<MethodRun> runs;
};

/// RMSE after the transient, tracking delay when the correlation peak is
/// unambiguous, and the complexity audit when a tracker config is given.
inline EvaluationReport evaluate_estimates(const std::string& name, std::span<const TrackerEstimate> est,
                                           const TruthSeries& truth, const ExperimentConfig& cfg,
                                           const std::optional<TrackerConfig>& audit_cfg) {
  EvaluationReport r;
  r.method = name;
  r.transient_skipped = samples_for(cfg.transient_skip_s, truth.sample_rate_hz);
  const auto e = rmse(est, truth, r.transient_skipped);
  r.rmse_amplitude_v = e.amplitude_v;
  r.rmse_frequency_hz = e.frequency_hz;
  r.rmse_phase_deg = e.phase_deg;
  r.samples_scored = e.samples;
  try {
    r.tracking_delay_ms = tracking_delay(est, truth, cfg.delay_max_lag_ms, r.transient_skipped).delay_ms;
  } catch (const Error& err) {
    if (err.code() != Errc::ambiguous_peak && err.code() != Errc::invalid_length &&
        err.code() != Errc::invalid_argument && err.code() != Errc::no_valid_samples)
      throw;
  }
  if (audit_cfg) r.ops = audit_complexity(*audit_cfg);
  return r;
}

/// Runs every configured method on the scenario's record; no files touched
/// except a replayed input.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult out;
  out.record = make_record(cfg);
  for (Method m : cfg.methods) {
    const auto tcfg = cfg.tracker_config(m);
    MethodRun run{m, run_tracker(tcfg, out.record.x1, out.record.x2), {}};
    run.report = evaluate_estimates(to_string(m), run.estimates, out.record.truth, cfg, tcfg);
    out.runs.push_back(std::move(run));
  }
  return out;
}

namespace detail {

inline std::string report_text(const std::vector<EvaluationReport>& rows, const CsvHeader& header, bool table) {
  std::ostringstream os;
  for (const auto& line : header) os << "# " << line << '\n';
  if (table) write_report_table(os, rows);
  else write_report_csv(os, rows);
  return os.str();
}

inline std::vector<double> masked(const std::vector<TrackerEstimate>& est, double TrackerEstimate::*field) {
  std::vector<double> y(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) y[i] = est[i].valid ? est[i].*field : std::nan("");
  return y;
}

inline std::vector<double> masked_amp(const std::vector<TrackerEstimate>& est) {
  std::vector<double> y(est.size());
  for (std::size_t i = 0; i < est.size(); ++i)
    y[i] = est[i].valid ? 0.5 * (est[i].amplitude1_v + est[i].amplitude2_v) : std::nan("");
  return y;
}

// Truth range plus half its span on each side, so transients do not flatten the plot.
inline void frame_on_truth(svg::Chart& c, const std::vector<double>& truth, double min_pad) {
  const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
  const double pad = std::max(min_pad, 0.5 * (*hi - *lo));
  c.y_min = *lo - pad;
  c.y_max = *hi + pad;
}

}  // namespace detail

/// Truth overlaid with each method's estimate, one chart per parameter.
inline std::vector<std::pair<std::string, std::string>> experiment_plots(const ExperimentResult& res,
                                                                         const CsvHeader& header) {
  const auto& t = res.record.truth;
  std::vector<double> x(t.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i) / t.sample_rate_hz;

  struct Param {
    const char* file;
    const char* title;
    const char* unit;
    const std::vector<double>* truth;
    double min_pad;
  };
  const Param params[] = {{"plot_amplitude.svg", "Amplitude", "amplitude (V)", &t.amplitude_v, 0.01},
                          {"plot_frequency.svg", "Frequency", "frequency (Hz)", &t.frequency_hz, 1.0},
                          {"plot_phase.svg", "Phase difference", "phase difference (deg)", &t.phase_diff_deg, 0.5}};
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& p = params[k];
    svg::Chart c;
    c.title = p.title;
    c.x_label = "time (s)";
    c.y_label = p.unit;
    c.x = x;
    c.comments = header;
    c.series.push_back({"truth", *p.truth, "#000000", 2.0});
    for (std::size_t m = 0; m < res.runs.size(); ++m) {
      const auto& est = res.runs[m].estimates;
      auto y = k == 0 ? detail::masked_amp(est)
                      : detail::masked(est, k == 1 ? &TrackerEstimate::frequency_hz : &TrackerEstimate::phase_diff_deg);
      c.series.push_back({to_string(res.runs[m].method), std::move(y), svg::palette(m), 1.0});
    }
    detail::frame_on_truth(c, *p.truth, p.min_pad);
    out.emplace_back(p.file, svg::render(c));
  }
  return out;
}

inline std::string estimate_file_name(Method m) { return std::string("est_") + to_string(m) + ".csv"; }

/// Writes record.csv, est_<method>.csv, report.csv, report.txt and, with
/// plotting on, three SVG charts. Returns the paths written.
inline std::vector<std::filesystem::path> write_experiment(const ExperimentResult& res, const ExperimentConfig& cfg,
                                                           const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& content) {
    csv::write_atomic(dir / name, content);
    written.push_back(dir / name);
  };
  put("record.csv", format_record(res.record, output_header(cfg, "record")));
  std::vector<EvaluationReport> rows;
  for (const auto& run : res.runs) {
    auto header = output_header(cfg, "estimates");
    header.insert(header.begin() + 2, std::string("estimator = ") + to_string(run.method));
    put(estimate_file_name(run.method), format_estimates(run.estimates, res.record.truth, header));
    rows.push_back(run.report);
  }
  put("report.csv", detail::report_text(rows, output_header(cfg, "report"), false));
  put("report.txt", detail::report_text(rows, output_header(cfg, "report"), true));
  if (cfg.plot)
    for (const auto& [name, content] : experiment_plots(res, output_header(cfg, "plot"))) put(name, content);
  return written;
}

/// Rebuilds the configuration recorded in an output file's comment header.
/// Lines that are not configuration keys are ignored.
inline ExperimentConfig config_from_header(const std::vector<std::string>& comments) {
  ExperimentConfig cfg;
  for (const auto& c : comments) {
    const auto eq = c.find('=');
    if (eq == std::string::npos) continue;
    const auto key = config::trim(c.substr(0, eq));
    if (!config::is_key(key)) continue;
    auto value = config::trim(c.substr(eq + 1));
    if (key == "seed" && value == "none") continue;
    apply_setting(cfg, key, value);
  }
  return cfg;
}

/// Scores a saved estimate CSV against the truth columns it carries.
inline EvaluationReport evaluate_file(const std::filesystem::path& path, const ExperimentConfig& overrides,
                                      bool with_audit) {
  const auto table = csv::read_table(path);
  auto [est, truth] = read_estimates(path);
  const auto recorded = config_from_header(table.comments);
  truth.sample_rate_hz = recorded.tracker.sample_rate_hz;
  const auto name = table.comment_value("estimator").value_or(path.stem().string());
  std::optional<TrackerConfig> audit;
  if (with_audit) audit = recorded.tracker_config(parse_method(name));
  ExperimentConfig scoring = recorded;
  scoring.transient_skip_s = overrides.transient_skip_s;
  scoring.delay_max_lag_ms = overrides.delay_max_lag_ms;
  return evaluate_estimates(name, est, truth, scoring, audit);
}

// --- filter inspection ---

struct DesignInspection {
  std::string name;
  PrototypeFilter prototype;
  ComplexCoefficients rotated;
};

/// Resolves design.filter: cbf, cnf, cascade-cbf, identity, or a coefficient
/// file (rotated up for low-pass, down for high-pass).
inline DesignInspection design_target(const ExperimentConfig& cfg) {
  const double theta = cfg.tracker.center_rad();
  const auto t = cfg.tracker_config(Method::cbf);
  const std::string& f = cfg.design_filter;
  auto make = [&](std::string name, PrototypeFilter p, double shift) {
    auto rotated = complex_shift(p, shift);
    return DesignInspection{std::move(name), std::move(p), std::move(rotated)};
  };
  if (f == "cbf") return make("cbf", t.cbf_prototype.value_or(bundled::cbf_elliptic5()), theta);
  if (f == "cnf") return make("cnf", t.cnf_prototype.value_or(bundled::cnf_elliptic4()), -theta);
  if (f == "cascade-cbf")
    return make("cascade-cbf", t.cascade_cbf_prototype.value_or(bundled::cascade_cbf_elliptic3()), theta);
  if (f == "identity")
    return make("identity", PrototypeFilter({1.0}, {1.0}, FilterKind::low_pass, cfg.tracker.sample_rate_hz), theta);
  auto p = load_prototype(f);
  const double shift = p.kind() == FilterKind::low_pass ? theta : -theta;
  return make(std::filesystem::path(f).stem().string(), std::move(p), shift);
}

inline double mag_db(std::complex<double> h) { return std::max(-400.0, 20.0 * std::log10(std::abs(h))); }

/// omega over [-pi, pi) on a uniform grid.
inline std::vector<double> design_grid(int points) {
  std::vector<double> w(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) w[static_cast<std::size_t>(k)] = -std::numbers::pi + 2.0 * std::numbers::pi * k / points;
  return w;
}

inline std::string format_design_response(const DesignInspection& d, const ExperimentConfig& cfg,
                                          const CsvHeader& header) {
  std::ostringstream os;
  csv::put_header(os, header);
  os << "omega_rad,freq_hz,proto_mag_db,proto_group_delay_samples,rotated_mag_db,rotated_group_delay_samples\n";
  const double fs = d.prototype.sample_rate_hz();
  for (double w : design_grid(cfg.design_grid_points)) {
    os << csv::num(w) << ',' << csv::num(w * fs / (2.0 * std::numbers::pi)) << ','
       << csv::num(mag_db(frequency_response(d.prototype, w))) << ','
       << csv::num(group_delay(d.prototype, w).samples) << ',' << csv::num(mag_db(frequency_response(d.rotated, w)))
       << ',' << csv::num(group_delay(d.rotated, w).samples) << '\n';
  }
  return os.str();
}

inline std::string format_design_roots(const DesignInspection& d, const CsvHeader& header) {
  std::ostringstream os;
  csv::put_header(os, header);
  os << "set,type,re,im,radius,angle_rad\n";
  auto rows = [&](const char* set, const char* type, const std::vector<std::complex<double>>& roots) {
    for (const auto& r : roots)
      os << set << ',' << type << ',' << csv::num(r.real()) << ',' << csv::num(r.imag()) << ','
         << csv::num(std::abs(r)) << ',' << csv::num(std::arg(r)) << '\n';
  };
  rows("prototype", "zero", zeros(d.prototype));
  rows("prototype", "pole", poles(d.prototype));
  rows("rotated", "zero", zeros(d.rotated));
  rows("rotated", "pole", poles(d.rotated));
  return os.str();
}

inline std::string design_plot(const DesignInspection& d, const ExperimentConfig& cfg, const CsvHeader& header) {
  svg::Chart c;
  c.title = "Magnitude response: " + d.name;
  c.x_label = "frequency (Hz)";
  c.y_label = "magnitude (dB)";
  c.comments = header;
  c.y_min = -120.0;
  c.y_max = 10.0;
  const double fs = d.prototype.sample_rate_hz();
  std::vector<double> proto, rot;
  for (double w : design_grid(cfg.design_grid_points)) {
    c.x.push_back(w * fs / (2.0 * std::numbers::pi));
    proto.push_back(mag_db(frequency_response(d.prototype, w)));
    rot.push_back(mag_db(frequency_response(d.rotated, w)));
  }
  c.series.push_back({"prototype", std::move(proto), "#7f7f7f", 1.2});
  c.series.push_back({"rotated", std::move(rot), "#d62728", 1.6});
  c.max_points = 4096;
  return svg::render(c);
}

/// Writes design_<name>_response.csv, design_<name>_roots.csv and, with
/// plotting on, design_<name>.svg.
inline std::vector<std::filesystem::path> write_design(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  if (cfg.design_grid_points < 8) throw UsageError("design.grid_points must be >= 8");
  const auto d = design_target(cfg);
  auto header = output_header(cfg, "design");
  header.insert(header.begin() + 2, "filter = " + d.name);
  header.insert(header.begin() + 3, "shift_rad = " + config::num(d.rotated.shift_rad));
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& content) {
    csv::write_atomic(dir / name, content);
    written.push_back(dir / name);
  };
  put("design_" + d.name + "_response.csv", format_design_response(d, cfg, header));
  put("design_" + d.name + "_roots.csv", format_design_roots(d, header));
  if (cfg.plot) put("design_" + d.name + ".svg", design_plot(d, cfg, header));
  return written;
}

// --- complexity audit ---

struct AuditRow {
  Method method;
  ComplexityAudit ops;
  int warmup_samples = 0;
};

inline std::vector<AuditRow> audit_methods(const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) throw UsageError("at least one method is required");
  std::vector<AuditRow> rows;
  for (Method m : cfg.methods) {
    const auto t = cfg.tracker_config(m);
    rows.push_back({m, audit_complexity(t), make_tracker(t)->warmup_samples()});
  }
  return rows;
}

inline std::string format_audit_csv(const std::vector<AuditRow>& rows, const CsvHeader& header) {
  std::ostringstream os;
  csv::put_header(os, header);
  os << "method,additions_per_sample,multiplications_per_sample,static_storage_bytes,warmup_samples\n";
  for (const auto& r : rows)
    os << to_string(r.method) << ',' << csv::num(r.ops.additions_per_sample) << ','
       << csv::num(r.ops.multiplications_per_sample) << ',' << r.ops.static_storage_bytes << ',' << r.warmup_samples
       << '\n';
  return os.str();
}

inline std::string format_audit_table(const std::vector<AuditRow>& rows) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %10s %10s %10s %8s\n", "method", "adds/smp", "mults/smp", "bytes", "warmup");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-10s %10.2f %10.2f %10llu %8d\n", to_string(r.method),
                  r.ops.additions_per_sample, r.ops.multiplications_per_sample,
                  static_cast<unsigned long long>(r.ops.static_storage_bytes), r.warmup_samples);
    os << line;
  }
  return os.str();
}

}  // namespace cmf
