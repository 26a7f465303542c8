// Command-line front end: cics --config run.json [--seed N] [--out DIR] [--override key=value]...

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cics/error.hpp"
#include "cics/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Convergent-input convergent-state certification toolkit"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
  bool print_config = false;
  app.add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  app.add_option("-s,--seed", seed, "override the config seed");
  app.add_option("-o,--out", out_dir, "output directory (overrides output.dir)");
  app.add_option("--override", overrides, "dotted-path override, e.g. args.eps=0.2 (repeatable)");
  app.add_flag("--print-config", print_config, "print the canonical config and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cics::kExitOk : cics::kExitConfigError;
  }

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot read config " << config_path << "\n";
    return cics::kExitIoError;
  }
  std::stringstream buf;
  buf << in.rdbuf();

  cics::ExperimentConfig cfg;
  try {
    cics::Json doc;
    try {
      doc = cics::Json::parse(buf.str());
    } catch (const cics::Json::parse_error& e) {
      cics::fail(cics::ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
    }
    for (const auto& o : overrides) cics::apply_override(doc, o);
    if (seed) doc["seed"] = *seed;
    if (!out_dir.empty()) doc["output"]["dir"] = out_dir;
    cfg = cics::ExperimentConfig::from_json(doc);
  } catch (const cics::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cics::kExitConfigError;
  }
  if (print_config) {
    std::cout << cfg.emit();
    return cics::kExitOk;
  }

  const cics::ExperimentOutcome outcome = cics::execute_experiment(cfg);
  std::cout << outcome.summary;
  try {
    for (const auto& path : cics::write_outputs(outcome, cfg, cfg.output.dir)) std::cout << "wrote " << path << "\n";
  } catch (const cics::Error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return cics::kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return cics::kExitUnexpected;
  }
  return outcome.exit_code;
}
