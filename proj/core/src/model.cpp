#include "deferlab/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace deferlab {

std::string_view to_string(HeadLayout layout) {
  return layout == HeadLayout::Augmented ? "augmented" : "split";
}

HeadLayout parse_layout(std::string_view name) {
  if (name == "augmented") return HeadLayout::Augmented;
  if (name == "split") return HeadLayout::Split;
  throw std::invalid_argument("unknown head layout '" + std::string(name) + "'");
}

HeadLayout layout_for(SurrogateKind kind) {
  return uses_augmented_scores(kind) ? HeadLayout::Augmented : HeadLayout::Split;
}

LinearModel LinearModel::zeros(HeadLayout layout, int K, int J, int d) {
  if (K < 1 || J < 1 || d < 1)
    throw std::invalid_argument("LinearModel: K, J and d must be positive");
  LinearModel m;
  m.layout = layout;
  m.K = K;
  m.J = J;
  m.d = d;
  m.weights.assign(static_cast<std::size_t>((K + J) * d), 0.0);
  m.bias.assign(static_cast<std::size_t>(K + J), 0.0);
  return m;
}

void LinearModel::validate() const {
  if (K < 1 || J < 1 || d < 1)
    throw std::invalid_argument("LinearModel: K, J and d must be positive");
  if (weights.size() != static_cast<std::size_t>((K + J) * d) ||
      bias.size() != static_cast<std::size_t>(K + J))
    throw std::invalid_argument("LinearModel: parameter sizes do not match (K, J, d)");
  for (double v : weights)
    if (!std::isfinite(v)) throw std::invalid_argument("LinearModel: non-finite weight");
  for (double v : bias)
    if (!std::isfinite(v)) throw std::invalid_argument("LinearModel: non-finite bias");
}

std::vector<double> LinearModel::logits(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("LinearModel: feature dimension " + std::to_string(x.size()) +
                                " != " + std::to_string(d));
  std::vector<double> out(bias);
  const double* w = weights.data();
  for (int r = 0; r < K + J; ++r, w += d) {
    double acc = 0.0;
    for (int c = 0; c < d; ++c) acc += w[c] * x[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] += acc;
  }
  return out;
}

std::variant<AugScores, DecScores> LinearModel::forward(std::span<const double> x) const {
  const std::vector<double> z = logits(x);
  if (layout == HeadLayout::Augmented) return to_aug(K, z);
  return to_dec(K, z);
}

std::vector<double> LinearModel::flat_params() const {
  std::vector<double> flat(weights);
  flat.insert(flat.end(), bias.begin(), bias.end());
  return flat;
}

void LinearModel::set_flat_params(std::span<const double> flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("LinearModel: flat parameter length mismatch");
  std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(weights.size()),
            weights.begin());
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(weights.size()), flat.end(), bias.begin());
}

std::vector<double> ParamGrad::flat() const {
  std::vector<double> out(weights);
  out.insert(out.end(), bias.begin(), bias.end());
  return out;
}

ParamGrad param_grad(const LinearModel& model, const SurrogateConfig& cfg,
                     std::span<const Sample> samples, std::span<const std::size_t> batch) {
  if (batch.empty()) throw std::invalid_argument("param_grad: empty batch");
  if (layout_for(cfg.kind) != model.layout)
    throw std::invalid_argument("param_grad: model layout does not match the surrogate");
  ParamGrad pg;
  pg.weights.assign(model.weights.size(), 0.0);
  pg.bias.assign(model.bias.size(), 0.0);
  const auto d = static_cast<std::size_t>(model.d);
  for (std::size_t idx : batch) {
    const Sample& s = samples[idx];
    const std::vector<double> z = model.logits(s.x);
    const LossGrad lg = loss_grad(cfg, model.K, z, s);
    pg.loss += lg.loss;
    for (std::size_t r = 0; r < lg.grad.size(); ++r) {
      const double g = lg.grad[r];
      if (g == 0.0) continue;
      pg.bias[r] += g;
      double* row = pg.weights.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) row[c] += g * s.x[c];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  pg.loss *= inv;
  for (double& v : pg.weights) v *= inv;
  for (double& v : pg.bias) v *= inv;
  return pg;
}

ParamGrad param_grad(const LinearModel& model, const SurrogateConfig& cfg,
                     std::span<const Sample> samples) {
  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return param_grad(model, cfg, samples, all);
}

double batch_loss(const LinearModel& model, const SurrogateConfig& cfg,
                  std::span<const Sample> samples) {
  if (samples.empty()) throw std::invalid_argument("batch_loss: no samples");
  double total = 0.0;
  for (const Sample& s : samples) total += loss_value(cfg, model.K, model.logits(s.x), s);
  return total / static_cast<double>(samples.size());
}

}  // namespace deferlab
