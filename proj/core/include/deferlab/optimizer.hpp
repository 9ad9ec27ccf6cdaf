#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace deferlab {

enum class OptimizerKind { SGD, Momentum, AdamW };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::AdamW;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled decay (AdamW): p -= lr * weight_decay * p before the Adam step.
  double weight_decay = 0.0;

  void validate() const;
};

// First-order optimizer over a flat parameter vector. Holds its own moment
// buffers, sized on construction.
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, double lr, std::size_t n_params);

  void step(std::span<double> params, std::span<const double> grad);

  long steps() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  double lr_;
  long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace deferlab
