#include "deferlab/trainer.hpp"

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>

#include "deferlab/eval_router.hpp"
#include "deferlab/rng.hpp"

namespace deferlab {

namespace {
constexpr std::uint64_t kShuffleTag = 0x5348554646ull;  // "SHUFF"
constexpr std::uint64_t kInitTag = 0x494e4954ull;        // "INIT"

bool logits_finite(const LinearModel& model, const std::vector<Sample>& samples,
                   std::span<const std::size_t> idx) {
  for (std::size_t i : idx)
    for (double z : model.logits(samples[i].x))
      if (!std::isfinite(z)) return false;
  return true;
}
}  // namespace

std::string_view to_string(InitScheme scheme) {
  return scheme == InitScheme::Zero ? "zero" : "fan_in_uniform";
}

InitScheme parse_init(std::string_view name) {
  if (name == "zero") return InitScheme::Zero;
  if (name == "fan_in_uniform") return InitScheme::FanInUniform;
  throw std::invalid_argument("unknown init scheme '" + std::string(name) + "'");
}

LinearModel init_model(HeadLayout layout, int K, int J, int d, InitScheme scheme,
                       std::uint64_t seed) {
  LinearModel m = LinearModel::zeros(layout, K, J, d);
  if (scheme == InitScheme::FanInUniform) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    CounterStream rng = CounterStream::keyed(seed, kInitTag);
    for (double& w : m.weights) w = bound * (2.0 * rng.uniform() - 1.0);
    for (double& b : m.bias) b = bound * (2.0 * rng.uniform() - 1.0);
  }
  return m;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  optimizer.validate();
  surrogate.validate();
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterStream rng = CounterStream::keyed(seed, kShuffleTag, static_cast<std::uint64_t>(epoch));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

TrainResult train(const LabeledDataset& train, const LabeledDataset& val, const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty() || val.empty()) throw std::invalid_argument("train: splits must be nonempty");
  const SuiteSpec& spec = train.spec;

  LinearModel model = init_model(layout_for(cfg.surrogate.kind), spec.K, spec.J,
                                 spec.feature_dim(), cfg.init, cfg.seed);
  Optimizer opt(cfg.optimizer, cfg.lr, model.param_count());
  std::vector<double> params = model.flat_params();

  TrainResult result;
  result.model = model;
  double best = std::numeric_limits<double>::infinity();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = epoch_order(cfg.seed, epoch, train.size());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      ParamGrad pg;
      try {
        pg = param_grad(model, cfg.surrogate, train.samples, batch);
      } catch (const std::invalid_argument&) {
        if (logits_finite(model, train.samples, batch)) throw;
        throw TrainingDiverged(epoch, "training diverged at epoch " + std::to_string(epoch) +
                                          ": non-finite logits");
      }
      if (!std::isfinite(pg.loss))
        throw TrainingDiverged(epoch, "training diverged at epoch " + std::to_string(epoch) +
                                          ": non-finite surrogate loss");
      loss_sum += pg.loss;
      ++batches;
      opt.step(params, pg.flat());
      for (double v : params)
        if (!std::isfinite(v))
          throw TrainingDiverged(epoch, "training diverged at epoch " + std::to_string(epoch) +
                                            ": non-finite parameter");
      model.set_flat_params(params);
    }

    std::vector<Action> decisions;
    try {
      decisions = decide(model, cfg.surrogate, val);
    } catch (const std::invalid_argument&) {
      std::vector<std::size_t> all(val.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      if (logits_finite(model, val.samples, all)) throw;
      throw TrainingDiverged(epoch, "training diverged at epoch " + std::to_string(epoch) +
                                        ": non-finite validation logits");
    }
    double dl = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) dl += defer_loss(decisions[i], val.samples[i]);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.val_defer_loss = dl / static_cast<double>(val.size());
    rec.val_exact_regret = exact_regret(decisions, val.truths);
    result.history.epochs.push_back(rec);
    if (rec.val_defer_loss < best) {
      best = rec.val_defer_loss;
      result.history.best_epoch = epoch;
      result.model = model;
    }
  }
  result.final_model = std::move(model);
  return result;
}

}  // namespace deferlab
