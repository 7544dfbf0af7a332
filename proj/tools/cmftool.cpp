#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cmf/experiment.hpp"

namespace fs = std::filesystem;
using namespace cmf;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Raw flag values; applied on top of the config file so flags win.
struct Flags {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::string> seed, methods, scenario, noise_sigma, out, replay, freq, amp, phasediff, duration;
  std::optional<std::string> filter, grid, transient_skip, max_lag;
  bool plot = false;
  std::vector<std::string> inputs;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "Flat key = value configuration file");
  cmd->add_option("--set", f.sets, "Override one configuration key (KEY=VALUE); repeatable");
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--method", f.methods, "Comma-separated methods: cbf,cnf,cbf-cnf,hilbert,anf-dtft");
  cmd->add_option("--out", f.out, "Output directory (default $CMF_OUT_DIR, else ./cmf_out)");
  cmd->add_flag("--plot", f.plot, "Also write SVG charts");
}

void add_scenario(CLI::App* cmd, Flags& f) {
  cmd->add_option("--scenario", f.scenario, "mrwm | batch | tone | replay");
  cmd->add_option("--replay", f.replay, "Sensor record CSV to replay (implies --scenario replay)");
  cmd->add_option("--noise-sigma", f.noise_sigma, "White noise standard deviation per channel (V)");
  cmd->add_option("--freq", f.freq, "Tone frequency (Hz)");
  cmd->add_option("--amp", f.amp, "Tone amplitude (V)");
  cmd->add_option("--phasediff", f.phasediff, "Tone phase difference (deg)");
  cmd->add_option("--duration", f.duration, "Record length (s) for the mrwm or tone scenario");
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig cfg;
  if (!f.config_file.empty()) apply_config_file(cfg, f.config_file);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got '" + kv + "'");
    apply_setting(cfg, config::trim(kv.substr(0, eq)), kv.substr(eq + 1));
  }
  auto put = [&](const char* key, const std::optional<std::string>& v) {
    if (v) apply_setting(cfg, key, *v);
  };
  put("seed", f.seed);
  put("methods", f.methods);
  put("scenario", f.scenario);
  if (f.replay) {
    apply_setting(cfg, "scenario", "replay");
    apply_setting(cfg, "replay_file", *f.replay);
  }
  put("noise_sigma", f.noise_sigma);
  put("tone.freq_hz", f.freq);
  put("tone.amp_v", f.amp);
  put("tone.phase_deg", f.phasediff);
  if (f.duration) apply_setting(cfg, cfg.scenario == Scenario::tone ? "tone.duration_s" : "mrwm.duration_s", *f.duration);
  put("design.filter", f.filter);
  put("design.grid_points", f.grid);
  put("transient_skip_s", f.transient_skip);
  put("delay_max_lag_ms", f.max_lag);
  if (f.plot) cfg.plot = true;
  if (f.out) cfg.out_dir = *f.out;
  return cfg;
}

fs::path output_dir(const ExperimentConfig& cfg) {
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  if (const char* env = std::getenv("CMF_OUT_DIR"); env && *env) return env;
  return "cmf_out";
}

void list(const std::vector<fs::path>& files) {
  for (const auto& p : files) std::cout << "wrote " << p.string() << '\n';
}

int cmd_design(const ExperimentConfig& cfg) {
  list(write_design(cfg, output_dir(cfg)));
  return 0;
}

int cmd_simulate(const ExperimentConfig& cfg) {
  if (cfg.scenario == Scenario::replay) throw UsageError("simulate does not take a replay scenario");
  const ExperimentResult res{make_record(cfg), {}};
  const auto dir = output_dir(cfg);
  std::vector<fs::path> written{dir / "record.csv"};
  csv::write_atomic(written.back(), format_record(res.record, output_header(cfg, "record")));
  if (cfg.plot)
    for (const auto& [name, content] : experiment_plots(res, output_header(cfg, "plot"))) {
      csv::write_atomic(dir / name, content);
      written.push_back(dir / name);
    }
  list(written);
  std::cout << "samples " << res.record.size() << ", snr_db " << config::num(measure_snr(res.record)) << '\n';
  return 0;
}

int cmd_track(const ExperimentConfig& cfg) {
  const auto res = run_experiment(cfg);
  const auto files = write_experiment(res, cfg, output_dir(cfg));
  std::vector<EvaluationReport> rows;
  for (const auto& r : res.runs) rows.push_back(r.report);
  write_report_table(std::cout, rows);
  list(files);
  return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::vector<std::string>& inputs, bool audit) {
  std::vector<EvaluationReport> rows;
  for (const auto& in : inputs) rows.push_back(evaluate_file(in, cfg, audit));
  write_report_table(std::cout, rows);
  const auto dir = output_dir(cfg);
  CsvHeader header{kToolVersion, "output = evaluation", "transient_skip_s = " + config::num(cfg.transient_skip_s),
                   "delay_max_lag_ms = " + config::num(cfg.delay_max_lag_ms)};
  for (const auto& in : inputs) header.push_back("input = " + fs::path(in).filename().string());
  std::ostringstream os;
  for (const auto& h : header) os << "# " << h << '\n';
  write_report_csv(os, rows);
  csv::write_atomic(dir / "evaluation.csv", os.str());
  list({dir / "evaluation.csv"});
  return 0;
}

int cmd_audit(const ExperimentConfig& cfg) {
  const auto rows = audit_methods(cfg);
  std::cout << format_audit_table(rows);
  const auto dir = output_dir(cfg);
  csv::write_atomic(dir / "audit.csv", format_audit_csv(rows, output_header(cfg, "audit")));
  list({dir / "audit.csv"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coriolis flowmeter signal tracking: filter design, simulation, tracking and evaluation"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  Flags f;
  bool audit_inputs = false;
  auto* design = app.add_subcommand("design", "Write magnitude, group delay and root CSVs for a filter");
  add_common(design, f);
  design->add_option("--filter", f.filter, "cbf | cnf | cascade-cbf | identity | coefficient file");
  design->add_option("--grid", f.grid, "Number of omega grid points over [-pi, pi)");

  auto* simulate = app.add_subcommand("simulate", "Generate a two-sensor record with ground truth");
  add_common(simulate, f);
  add_scenario(simulate, f);

  auto* track = app.add_subcommand("track", "Run trackers on a scenario and score them");
  add_common(track, f);
  add_scenario(track, f);

  auto* evaluate = app.add_subcommand("evaluate", "Score saved estimate CSVs against their truth columns");
  add_common(evaluate, f);
  evaluate->add_option("inputs", f.inputs, "Estimate CSV files")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--transient-skip", f.transient_skip, "Seconds excluded from scoring (default 0.2)");
  evaluate->add_option("--max-lag", f.max_lag, "Delay search window (ms, default 60)");
  evaluate->add_flag("--audit", audit_inputs, "Re-run the complexity audit from each file's recorded config");

  auto* audit = app.add_subcommand("audit", "Per-sample operation counts and storage for each method");
  add_common(audit, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    const auto cfg = resolve(f);
    if (design->parsed()) return cmd_design(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (track->parsed()) return cmd_track(cfg);
    if (evaluate->parsed()) return cmd_evaluate(cfg, f.inputs, audit_inputs);
    return cmd_audit(cfg);
  } catch (const UsageError& e) {
    std::cerr << "cmftool: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "cmftool: " << e.what() << '\n';
    return kExitRuntime;
  }
}
