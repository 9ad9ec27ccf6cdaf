#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "deferlab/surrogates.hpp"

namespace deferlab {

// Augmented: one (K+J) x d score map. Split: a K x d class head stacked on a
// J x d expert head. Both store the rows in the same [class | expert] order,
// so the parameter shapes coincide and only the interpretation differs.
enum class HeadLayout { Augmented, Split };

std::string_view to_string(HeadLayout layout);
HeadLayout parse_layout(std::string_view name);
HeadLayout layout_for(SurrogateKind kind);

struct LinearModel {
  HeadLayout layout = HeadLayout::Split;
  int K = 0;
  int J = 0;
  int d = 0;
  std::vector<double> weights;  // (K+J) x d, row-major
  std::vector<double> bias;     // K+J

  static LinearModel zeros(HeadLayout layout, int K, int J, int d);

  int outputs() const { return K + J; }
  std::size_t param_count() const { return weights.size() + bias.size(); }
  void validate() const;

  // W x + b as one [class | expert] vector.
  std::vector<double> logits(std::span<const double> x) const;
  std::variant<AugScores, DecScores> forward(std::span<const double> x) const;

  // Flat parameter view: weights then bias.
  std::vector<double> flat_params() const;
  void set_flat_params(std::span<const double> flat);
};

struct ParamGrad {
  double loss = 0.0;  // mean surrogate loss over the batch
  std::vector<double> weights;
  std::vector<double> bias;

  // Same ordering as LinearModel::flat_params.
  std::vector<double> flat() const;
};

// Mean surrogate loss and parameter gradient over the selected samples:
// d loss / d W_row = (d loss / d logit_row) x^T.
ParamGrad param_grad(const LinearModel& model, const SurrogateConfig& cfg,
                     std::span<const Sample> samples, std::span<const std::size_t> batch);
ParamGrad param_grad(const LinearModel& model, const SurrogateConfig& cfg,
                     std::span<const Sample> samples);

// Mean surrogate loss only.
double batch_loss(const LinearModel& model, const SurrogateConfig& cfg,
                  std::span<const Sample> samples);

}  // namespace deferlab
