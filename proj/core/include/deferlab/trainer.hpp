#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "deferlab/model.hpp"
#include "deferlab/optimizer.hpp"
#include "deferlab/surrogates.hpp"
#include "deferlab/synth_suites.hpp"

namespace deferlab {

// Zero: every weight and bias 0. FanInUniform: U(-1/sqrt(d), 1/sqrt(d)) per
// entry from the run seed's init stream.
enum class InitScheme { Zero, FanInUniform };

std::string_view to_string(InitScheme scheme);
InitScheme parse_init(std::string_view name);

struct TrainConfig {
  double lr = 1e-2;
  int epochs = 200;
  int batch_size = 128;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  InitScheme init = InitScheme::Zero;
  SurrogateConfig surrogate;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;        // mean surrogate loss over the epoch's batches
  double val_defer_loss = 0.0;    // realized 0-1 defer loss on the validation split
  double val_exact_regret = 0.0;  // from the analytic truths
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;  // argmin val_defer_loss, lowest epoch on ties
};

struct TrainResult {
  LinearModel model;        // parameters snapshotted at best_epoch
  LinearModel final_model;  // parameters after the last epoch
  TrainHistory history;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, const std::string& what)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// Per-epoch shuffled order of [0, n), a pure function of (seed, epoch).
std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n);

LinearModel init_model(HeadLayout layout, int K, int J, int d, InitScheme scheme,
                       std::uint64_t seed);

// Trains a freshly initialized linear model on `train`, selecting the epoch with
// the lowest validation defer loss. Throws TrainingDiverged on a non-finite
// loss or parameter.
TrainResult train(const LabeledDataset& train, const LabeledDataset& val, const TrainConfig& cfg);

}  // namespace deferlab
