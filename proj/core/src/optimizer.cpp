#include "deferlab/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace deferlab {

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::SGD: return "sgd";
    case OptimizerKind::Momentum: return "momentum";
    case OptimizerKind::AdamW: return "adamw";
  }
  return "unknown";
}

OptimizerKind parse_optimizer(std::string_view name) {
  for (OptimizerKind k : {OptimizerKind::SGD, OptimizerKind::Momentum, OptimizerKind::AdamW})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

void OptimizerConfig::validate() const {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("Adam betas must be in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
}

Optimizer::Optimizer(OptimizerConfig cfg, double lr, std::size_t n_params)
    : cfg_(cfg), lr_(lr) {
  cfg_.validate();
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg_.kind != OptimizerKind::SGD) m_.assign(n_params, 0.0);
  if (cfg_.kind == OptimizerKind::AdamW) v_.assign(n_params, 0.0);
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) throw std::invalid_argument("Optimizer: size mismatch");
  if (cfg_.kind != OptimizerKind::SGD && params.size() != m_.size())
    throw std::invalid_argument("Optimizer: parameter count changed");
  ++t_;
  const std::size_t n = params.size();
  switch (cfg_.kind) {
    case OptimizerKind::SGD:
      for (std::size_t i = 0; i < n; ++i) params[i] -= lr_ * grad[i];
      break;
    case OptimizerKind::Momentum:
      for (std::size_t i = 0; i < n; ++i) {
        m_[i] = cfg_.momentum * m_[i] + grad[i];
        params[i] -= lr_ * m_[i];
      }
      break;
    case OptimizerKind::AdamW: {
      const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
      for (std::size_t i = 0; i < n; ++i) {
        params[i] -= lr_ * cfg_.weight_decay * params[i];
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
      break;
    }
  }
}

}  // namespace deferlab
