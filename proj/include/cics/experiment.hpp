#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cics/estimators.hpp"
#include "cics/gallery.hpp"
#include "cics/serialize.hpp"

namespace cics {

inline constexpr int kReportSchemaVersion = 1;

/// Process exit codes; fixed and documented in the README.
enum ExitCode : int {
  kExitOk = 0,
  kExitUnexpected = 1,
  kExitHypothesisFailed = 2,
  kExitInconclusive = 3,
  kExitEstimatorError = 4,
  kExitConfigError = 5,
  kExitIoError = 6,
  kExitViolated = 7,
};

struct RegionConfig {
  enum class Kind { whole, box, ball, set_union } kind = Kind::whole;
  Vector lo, hi, center;
  double radius = 0.0;
  std::vector<RegionConfig> parts;
};

struct SetConfig {
  enum class Kind { box, ball, points } kind = Kind::box;
  Vector lo, hi, center;
  double radius = 0.0;
  std::vector<Vector> points;
};

struct InputConfig {
  enum class Kind { constant, piecewise, exp_decay, expression } kind = Kind::constant;
  Vector value;
  std::vector<double> breakpoints;
  std::vector<Vector> values;
  Vector offset, amplitude;
  double rate = 1.0;
  std::vector<std::string> expressions;  // components in t
};

struct InlineSystemConfig {
  std::string name = "inline";
  std::vector<std::string> field;
  int input_dim = 1;
  std::optional<RegionConfig> state_domain;  // default: whole space
  std::optional<RegionConfig> input_set;     // default: whole space
  std::optional<Vector> x_bar, u_bar;
};

/// Declarative experiment description (JSON). Parsing rejects unknown keys;
/// emit() is canonical so emit -> parse -> emit is byte-identical.
struct ExperimentConfig {
  std::string system;  // gallery name; ignored when inline_system is set
  std::optional<InlineSystemConfig> inline_system;
  std::string command;
  std::uint64_t seed = 0;

  struct Args {
    std::optional<Vector> xi;
    std::optional<double> t_end, eps, v_radius, T, horizon, margin;
    std::optional<std::vector<double>> ladder, stability_eps;
    std::optional<std::vector<std::string>> path;
    std::optional<InputConfig> input;
    std::optional<SetConfig> K;
  } args;

  EstimatorConfig estimator;  // seed is taken from `seed`
  struct Output {
    std::string dir = "out";
    std::vector<std::string> formats{"csv", "json", "summary"};
  } output;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig from_json(const Json& j);
  Json to_json() const;
  std::string emit() const;
  std::string system_label() const;
};

/// Applies a dotted-path override ("args.eps=0.2") to a config document.
/// The value is parsed as JSON when possible, otherwise taken as a string.
void apply_override(Json& doc, const std::string& assignment);

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> commands{"simulate", "delta1", "tau", "delta2", "delta3", "stability",
                                                 "uniform-attraction", "cics", "falsify", "demo-not-iss"};
  return commands;
}

/// Result of running a command, before anything touches the filesystem.
struct ExperimentOutcome {
  int exit_code = kExitOk;
  std::string outcome;  // success, converges, hypothesis-failed, ...
  Json report;          // deterministic: no timestamps
  std::string csv;
  std::string violations_csv;  // certificate commands only
  std::string summary;
  std::string stem;  // {command}-{system}-{seed}
};

ExperimentOutcome execute_experiment(const ExperimentConfig& cfg);

/// Writes report JSON, metadata JSON (timestamps), CSV and summary into
/// `out_dir` using temp-file + rename. Throws io errors naming the path.
std::vector<std::string> write_outputs(const ExperimentOutcome& outcome, const ExperimentConfig& cfg,
                                       const std::string& out_dir);

/// execute_experiment + write_outputs; returns the process exit code.
int run_experiment(const ExperimentConfig& cfg, std::vector<std::string>* written = nullptr);

/// Writes the command's plot-data CSV ({command}-{system}-{seed}.csv).
std::string emit_plot_data(const ExperimentOutcome& outcome, const std::string& out_dir);

/// Atomic write: temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace cics
