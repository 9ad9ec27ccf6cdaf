#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "deferlab/eval_router.hpp"
#include "deferlab/geomprobe.hpp"
#include "deferlab/synth_suites.hpp"
#include "deferlab/trainer.hpp"

namespace deferlab {

struct RunConfig {
  SuiteSpec suite = SuiteSpec::defaults(SuiteKind::NestedRedundant);
  std::vector<SurrogateConfig> surrogates;
  std::vector<std::uint64_t> seeds{0};
  TrainConfig train;
  std::filesystem::path out_dir = "deferlab-out";
  int jobs = 1;

  void validate() const;
};

// Every surrogate, seed 0, default suite sizes.
RunConfig default_run_config(SuiteKind suite);

// YAML layout:
//   suite: {name, K, J, n_train, n_val, n_test, expert_rate, offregion_rate}
//   surrogates: [decoupled, {kind: decoupled, beta: 0.25}, ...]
//   seeds: [0, 1, 2]
//   train: {lr, epochs, batch_size, init, optimizer: {kind, momentum, beta1, beta2, eps, weight_decay}}
//   beta: 0.5        # default decoupled per-expert weight
//   out: path
//   jobs: 1
// Unknown keys are rejected.
RunConfig parse_run_config(std::string_view yaml_text);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

struct RunRecord {
  SuiteKind suite = SuiteKind::NestedRedundant;
  SurrogateKind surrogate = SurrogateKind::Decoupled;
  double beta = 0.5;
  std::uint64_t seed = 0;
  int J = 0;
  int best_epoch = -1;
  Metrics metrics;
};

// Trains and evaluates one (surrogate, seed) pair.
RunRecord run_one(const RunConfig& cfg, const SurrogateConfig& surrogate, std::uint64_t seed,
                  TrainResult* trained = nullptr);

// Fans out over (surrogate, seed) on cfg.jobs workers. Records come back in
// config order: surrogates outer, seeds inner.
std::vector<RunRecord> run_suite(const RunConfig& cfg);

std::string metrics_csv(const std::vector<RunRecord>& records);
// Mean and population std per surrogate, sorted by mean exact regret.
nlohmann::json summarize(const RunConfig& cfg, const std::vector<RunRecord>& records);

// Writes <out>/<suite>_seed<seed>.csv and its .json sidecar; returns the CSV path.
std::filesystem::path cmd_generate(const SuiteSpec& spec, const std::filesystem::path& out_dir);

// Per-run model snapshot, history and metrics under <out>/runs/, then
// <out>/metrics.csv and <out>/summary.json.
std::vector<RunRecord> cmd_suite(const RunConfig& cfg);

// Probe defaults with train settings and jobs from cfg; cfg.seeds replace the
// probe's own seeds only when `use_cfg_seeds` is set.
ProbeConfig probe_config(ProbeKind probe, const RunConfig& cfg, bool use_cfg_seeds);
// Runs the probe and writes <out>/geometry_<probe>.csv; returns that path.
std::filesystem::path cmd_diagnose(ProbeKind probe, const RunConfig& cfg, bool use_cfg_seeds);

// CSV: surrogate,K,J,beta,constant (blank where no constant is known).
std::string cmd_constants(int K, int J, double beta);

// Aggregates metrics CSVs into mean/std per (suite, surrogate, J), sorted by
// suite then mean exact regret.
std::string cmd_report(const std::vector<std::filesystem::path>& metrics_files);

// Machine-readable failure record.
nlohmann::json error_json(std::string_view command, std::string_view message);

}  // namespace deferlab
