#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cics/error.hpp"
#include "cics/experiment.hpp"
#include "cics/serialize.hpp"
#include "test_systems.hpp"

using namespace cics;
using namespace cics::testing;
namespace fs = std::filesystem;

namespace {

ExperimentConfig cfg_from(const char* text) { return ExperimentConfig::parse(text); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cics-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kInlineConfig = R"cfg({
  "system": {"inline": {"name": "toy", "field": ["-x + (1 + x^2) * u"], "input_dim": 1,
             "state_domain": {"union": [{"box": {"lo": -5, "hi": 5}}, {"ball": {"center": [7], "radius": 1}}]},
             "input_set": {"whole": true}, "x_bar": 0, "u_bar": [0]}},
  "command": "simulate",
  "seed": 12,
  "args": {"xi": 1, "t_end": 2.5, "input": {"piecewise": {"breakpoints": [1, 2], "values": [0.5, [-0.25], 0]}}},
  "estimator": {"delta_max": 2, "validation_trials": 100},
  "tolerances": {"rel": 1e-10, "max_step": 0.5},
  "output": {"dir": "somewhere", "formats": ["json", "csv"]}
})cfg";

}  // namespace

// ---- config ----------------------------------------------------------------

TEST(Config, EmitParseEmitIsByteIdentical) {
  const char* configs[] = {
      kInlineConfig,
      R"cfg({"system": "linear-1d", "command": "cics", "args": {"xi": 3,
          "input": {"exp_decay": {"offset": 0, "amplitude": 1, "rate": 1}}, "K": {"box": {"lo": -4, "hi": 4}},
          "ladder": [0.5, 0.1, 0.02]}})cfg",
      R"cfg({"system": "destabilizable-1d", "command": "falsify", "args": {"path": "t + 1", "K": {"points": [[0], [1]]}}})cfg",
      R"cfg({"system": "linear-2d", "command": "uniform-attraction", "args": {"eps": 0.3,
          "K": {"ball": {"center": [0, 0], "radius": 1}}, "input": {"expression": ["exp(-t)", "0"]}}})cfg",
      R"cfg({"system": "sontag-counterexample", "command": "demo-not-iss", "args": {"stability_eps": [0.1, 0.2]}})cfg",
  };
  for (const char* text : configs) {
    const std::string once = cfg_from(text).emit();
    const std::string twice = ExperimentConfig::parse(once).emit();
    EXPECT_EQ(once, twice) << text;
  }
}

TEST(Config, UnknownKeysAreRejected) {
  EXPECT_THROW(cfg_from(R"cfg({"system": "linear-1d", "command": "simulate", "colour": 1})cfg"), Error);
  EXPECT_THROW(cfg_from(R"cfg({"system": "linear-1d", "command": "simulate", "args": {"eps2": 1}})cfg"), Error);
  EXPECT_THROW(cfg_from(R"cfg({"system": "linear-1d", "command": "simulate", "estimator": {"trials": 1}})cfg"), Error);
  EXPECT_THROW(cfg_from(R"cfg({"system": "linear-1d", "command": "simulate", "args": {"K": {"disc": {}}}})cfg"), Error);
}

TEST(Config, UnknownCommandAndBadValuesAreConfigErrors) {
  for (const char* text : {R"cfg({"system": "linear-1d", "command": "prove-everything"})cfg",
                           R"cfg({"system": "linear-1d", "command": "delta1", "args": {"eps": -1}})cfg",
                           R"cfg({"system": "linear-1d", "command": "delta1", "estimator": {"safety": 1.5}})cfg",
                           R"cfg({"system": "linear-1d"})cfg", "not json"}) {
    try {
      cfg_from(text);
      ADD_FAILURE() << "accepted " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::config) << text;
    }
  }
}

TEST(Config, OverridesUseDottedPaths) {
  Json doc = Json::parse(R"cfg({"system": "linear-1d", "command": "delta1", "args": {"eps": 0.1}})cfg");
  apply_override(doc, "args.eps=0.25");
  apply_override(doc, "estimator.tolerances=null");
  doc["estimator"].erase("tolerances");
  apply_override(doc, "output.dir=results/run 1");
  apply_override(doc, "args.ladder=[0.5,0.1]");
  const ExperimentConfig c = ExperimentConfig::from_json(doc);
  EXPECT_EQ(*c.args.eps, 0.25);
  EXPECT_EQ(c.output.dir, "results/run 1");
  EXPECT_EQ(c.args.ladder->size(), 2u);
  EXPECT_THROW(apply_override(doc, "noequals"), Error);
  EXPECT_THROW(apply_override(doc, "args.eps.inner=1"), Error);
}

// ---- execution -------------------------------------------------------------

TEST(Experiment, UnknownCommandSetDirectlyGivesConfigExit) {
  ExperimentConfig c = cfg_from(R"cfg({"system": "linear-1d", "command": "simulate", "args": {"xi": 1}})cfg");
  c.command = "bogus";
  const auto out = execute_experiment(c);
  EXPECT_EQ(out.exit_code, kExitConfigError);
  EXPECT_EQ(out.report["error"]["code"], "config-error");
}

TEST(Experiment, MissingArgumentAndUnknownSystem) {
  EXPECT_EQ(execute_experiment(cfg_from(R"cfg({"system": "linear-1d", "command": "delta1"})cfg")).exit_code,
            kExitConfigError);
  EXPECT_EQ(execute_experiment(cfg_from(R"cfg({"system": "nope", "command": "simulate", "args": {"xi": 1}})cfg")).exit_code,
            kExitConfigError);
}

TEST(Experiment, EstimatorFailureGivesEstimatorExit) {
  const auto out = execute_experiment(cfg_from(R"cfg({"system": "linear-1d", "command": "delta1", "args": {"eps": 1e-14}})cfg"));
  EXPECT_EQ(out.exit_code, kExitEstimatorError);
  EXPECT_EQ(out.report["error"]["code"], "no-stability");
  EXPECT_FALSE(out.report["error"]["message"].get<std::string>().empty());
}

TEST(Experiment, SimulateCsvSchema) {
  const auto out =
      execute_experiment(cfg_from(R"cfg({"system": "linear-1d", "command": "simulate", "args": {"xi": 1, "t_end": 1}})cfg"));
  ASSERT_EQ(out.exit_code, kExitOk);
  const auto rows = lines(out.csv);
  ASSERT_GT(rows.size(), 2u);
  EXPECT_EQ(rows.front(), "t,x_1,u_1");
  const auto last = split(rows.back());
  EXPECT_DOUBLE_EQ(std::stod(last[0]), 1.0);
  EXPECT_NEAR(std::stod(last[1]), std::exp(-1.0), 1e-6);
  EXPECT_EQ(out.stem, "simulate-linear-1d-0");
}

TEST(Experiment, EmptyTrajectoryGivesHeaderOnlyCsv) {
  const auto out =
      execute_experiment(cfg_from(R"cfg({"system": "linear-2d", "command": "simulate", "args": {"xi": [1, 0], "t_end": 0}})cfg"));
  ASSERT_EQ(out.exit_code, kExitOk);
  EXPECT_EQ(out.csv, "t,x_1,x_2,u_1,u_2\n");
}

TEST(Experiment, CicsRunConvergesWithMarkers) {
  const auto out = execute_experiment(cfg_from(R"cfg({"system": "linear-1d", "command": "cics", "args": {"xi": 3,
      "input": {"exp_decay": {"offset": 0, "amplitude": 1, "rate": 1}}, "K": {"box": {"lo": -4, "hi": 4}},
      "ladder": [0.5, 0.1]}})cfg"));
  EXPECT_EQ(out.exit_code, kExitOk);
  EXPECT_EQ(out.report["result"]["verdict"]["conclusion"], "converges");
  const auto rows = lines(out.csv);
  const auto header = split(rows.front());
  ASSERT_GE(header.size(), 3u);
  EXPECT_EQ(header[0], "t");
  EXPECT_EQ(header[1], "dist_x");
  EXPECT_EQ(header[2], "tail_norm");
  int markers = 0;
  for (const auto& r : rows)
    if (r.find("T1") != std::string::npos || r.find("T2") != std::string::npos ||
        r.find("T_conv") != std::string::npos)
      ++markers;
  EXPECT_EQ(markers, 6);
}

TEST(Experiment, CicsHypothesisFailureExitCode) {
  const auto out = execute_experiment(cfg_from(R"cfg({"system": "sontag-counterexample", "command": "cics",
      "args": {"xi": 2, "input": {"constant": 1}, "K": {"box": {"lo": -3, "hi": 3}}, "ladder": [1, 0.2]}})cfg"));
  EXPECT_EQ(out.exit_code, kExitHypothesisFailed);
  EXPECT_EQ(out.outcome, "hypothesis-failed");
}

TEST(Experiment, FalsifyEmitsInverseInput) {
  const auto out = execute_experiment(
      cfg_from(R"cfg({"system": "destabilizable-1d", "command": "falsify", "args": {"path": ["t + 1"]}})cfg"));
  ASSERT_EQ(out.exit_code, kExitOk);
  const auto rows = lines(out.csv);
  ASSERT_EQ(split(rows.front()), (std::vector<std::string>{"t", "x_1", "p_1", "u_1"}));
  const std::size_t data = rows.size() - 1;
  ASSERT_GE(data, 100u);
  for (int k = 0; k < 100; ++k) {
    const auto cells = split(rows[1 + static_cast<std::size_t>(k) * (data - 1) / 99]);
    const double t = std::stod(cells[0]);
    EXPECT_NEAR(std::stod(cells[3]), (t + 2.0) / (t * t + 2.0 * t + 2.0), 1e-9) << t;
  }
}

TEST(Experiment, ReportsAreDeterministic) {
  const char* text = R"cfg({"system": "bistable-1d", "command": "delta3", "seed": 5,
      "args": {"eps": 0.2, "K": {"box": {"lo": -0.9, "hi": 0.9}}}, "estimator": {"validation_trials": 200}})cfg";
  const auto a = execute_experiment(cfg_from(text));
  const auto b = execute_experiment(cfg_from(text));
  ASSERT_EQ(a.exit_code, kExitOk);
  EXPECT_EQ(a.report.dump(), b.report.dump());
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_EQ(a.report["schema_version"], kReportSchemaVersion);
  EXPECT_FALSE(a.report.dump().find("generated_at") != std::string::npos);
}

TEST(Experiment, WritesAllArtifactsAtomically) {
  const fs::path dir = scratch_dir("write");
  ExperimentConfig c = cfg_from(R"cfg({"system": "linear-1d", "command": "delta1", "seed": 3, "args": {"eps": 0.1}})cfg");
  c.output.dir = dir.string();
  std::vector<std::string> written;
  EXPECT_EQ(run_experiment(c, &written), kExitOk);
  for (const char* f : {"delta1-linear-1d-3.json", "delta1-linear-1d-3.meta.json", "delta1-linear-1d-3.csv",
                        "delta1-linear-1d-3-violations.csv", "delta1-linear-1d-3.txt"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_EQ(e.path().extension() == ".tmp", false);
  const Json report = Json::parse(slurp(dir / "delta1-linear-1d-3.json"));
  EXPECT_EQ(report["result"]["certificate"]["kind"], "delta1");
  const Json meta = Json::parse(slurp(dir / "delta1-linear-1d-3.meta.json"));
  EXPECT_TRUE(meta.contains("generated_at"));
  EXPECT_EQ(lines(slurp(dir / "delta1-linear-1d-3-violations.csv")).size(), 1u);
  fs::remove_all(dir);
}

TEST(Experiment, UnwritableOutputGivesIoExit) {
  const fs::path dir = scratch_dir("io");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  ExperimentConfig c = cfg_from(R"cfg({"system": "linear-1d", "command": "simulate", "args": {"xi": 1, "t_end": 1}})cfg");
  c.output.dir = (dir / "file" / "sub").string();
  EXPECT_EQ(run_experiment(c), kExitIoError);
  EXPECT_THROW(write_file_atomic((dir / "missing" / "x.txt").string(), "x"), Error);
  fs::remove_all(dir);
}

// ---- serialization ---------------------------------------------------------

TEST(Serialize, DoublesRoundTripAndNonFiniteIsNull) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_TRUE(number_json(std::numeric_limits<double>::infinity()).is_null());
  EXPECT_TRUE(number_json(std::nan("")).is_null());
  EXPECT_EQ(vector_json(vec({1.0, 2.0})).dump(), "[1.0,2.0]");
}

TEST(Serialize, CertificateDocumentLayout) {
  EstimatorConfig cfg;
  cfg.validation_trials = 50;
  const Certificate c = estimate_delta3(linear_1d(), CompactSet::box(scalar(-1), scalar(1)), 0.2, cfg);
  const Json j = to_json(c);
  for (const char* k : {"kind", "inputs", "value", "construction_trace", "validation"}) EXPECT_TRUE(j.contains(k)) << k;
  for (const char* k : {"seed", "trials", "violations", "horizon"}) EXPECT_TRUE(j["validation"].contains(k)) << k;
  EXPECT_EQ(j["construction_trace"]["certificates"].size(), 2u);
  EXPECT_EQ(j["construction_trace"]["certificates"][0]["kind"], "tau");
  const auto rows = lines(certificate_csv(c));
  EXPECT_EQ(rows.front(), "path,kind,eps,value,time,trials,violations");
  EXPECT_EQ(rows.size(), 4u);
}
