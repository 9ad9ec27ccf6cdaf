#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deferlab/dataset_io.hpp"
#include "deferlab/experiment.hpp"
#include "deferlab/parallel.hpp"

namespace fs = std::filesystem;
using namespace deferlab;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seeds;
  int jobs = 0;
};

RunConfig resolve(const Common& c, const std::string& suite_override) {
  RunConfig cfg = c.config.empty() ? default_run_config(suite_override.empty()
                                                            ? SuiteKind::NestedRedundant
                                                            : parse_suite(suite_override))
                                   : load_run_config(c.config);
  if (!c.config.empty() && !suite_override.empty()) {
    const SuiteKind k = parse_suite(suite_override);
    if (k != cfg.suite.suite) {
      const std::uint64_t seed = cfg.suite.seed;
      cfg.suite = SuiteSpec::defaults(k);
      cfg.suite.seed = seed;
    }
  }
  if (!c.seeds.empty()) cfg.seeds = c.seeds;
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (c.jobs > 0) cfg.jobs = c.jobs;
  cfg.jobs = resolve_jobs(cfg.jobs);
  cfg.validate();
  return cfg;
}

int fail(const std::string& command, const std::string& message, const std::string& out, int code) {
  const std::string body = error_json(command, message).dump(2) + "\n";
  std::cerr << body;
  if (!out.empty()) {
    try {
      io::write_atomic(fs::path(out) / "error.json", body);
    } catch (const std::exception&) {
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deferlab: multi-expert learning-to-defer laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--config", common.config, "YAML run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", common.out, "Output directory");
  app.add_option("--seeds", common.seeds, "Seeds (overrides the config)")->delimiter(',');
  app.add_option("--jobs", common.jobs, "Worker threads (DEFERLAB_JOBS overrides)");

  std::string suite_name;
  auto* gen = app.add_subcommand("generate", "Write train/val/test splits as CSV + JSON sidecar");
  gen->add_option("--suite", suite_name, "Suite name (overrides the config)");

  auto* suite = app.add_subcommand("suite", "Train and evaluate every (surrogate, seed) pair");
  suite->add_option("--suite", suite_name, "Suite name (overrides the config)");

  std::string probe_name;
  auto* diag = app.add_subcommand("diagnose", "Geometry probe: curvature, starvation or coupling");
  diag->add_option("probe", probe_name, "Probe name")->required();

  int K = 16, J = 24;
  double beta = 0.5;
  auto* consts = app.add_subcommand("constants", "Transfer constants per surrogate");
  consts->add_option("-K,--classes", K, "Number of classes");
  consts->add_option("-J,--experts", J, "Number of experts");
  consts->add_option("--beta", beta, "Decoupled per-expert weight");

  std::vector<std::string> inputs;
  auto* report = app.add_subcommand("report", "Aggregate metrics CSVs into mean/std tables");
  report->add_option("inputs", inputs, "metrics.csv files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const std::string cmd = app.get_subcommands().empty() ? "deferlab" : app.get_subcommands().front()->get_name();
    return fail(cmd, e.what(), "", e.get_exit_code() ? e.get_exit_code() : 2);
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (gen->parsed()) {
      const RunConfig cfg = resolve(common, suite_name);
      for (std::uint64_t seed : cfg.seeds) {
        SuiteSpec spec = cfg.suite;
        spec.seed = seed;
        std::cout << cmd_generate(spec, cfg.out_dir).string() << "\n";
      }
    } else if (suite->parsed()) {
      const RunConfig cfg = resolve(common, suite_name);
      cmd_suite(cfg);
      std::cout << (cfg.out_dir / "metrics.csv").string() << "\n"
                << (cfg.out_dir / "summary.json").string() << "\n";
    } else if (diag->parsed()) {
      const ProbeKind probe = parse_probe(probe_name);
      const RunConfig cfg = resolve(common, "");
      const bool own_seeds = !common.seeds.empty() || !common.config.empty();
      std::cout << cmd_diagnose(probe, cfg, own_seeds).string() << "\n";
    } else if (consts->parsed()) {
      const std::string table = cmd_constants(K, J, beta);
      if (!common.out.empty()) io::write_atomic(fs::path(common.out) / "constants.csv", table);
      std::cout << table;
    } else if (report->parsed()) {
      std::vector<fs::path> files(inputs.begin(), inputs.end());
      const std::string table = cmd_report(files);
      if (!common.out.empty()) io::write_atomic(fs::path(common.out) / "report.csv", table);
      std::cout << table;
    }
  } catch (const std::invalid_argument& e) {
    return fail(cmd, e.what(), common.out, 2);
  } catch (const std::exception& e) {
    return fail(cmd, e.what(), common.out, 1);
  }
  return 0;
}
