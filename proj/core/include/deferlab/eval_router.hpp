#pragma once

#include <optional>
#include <span>
#include <vector>

#include "deferlab/bayes_oracle.hpp"
#include "deferlab/model.hpp"
#include "deferlab/surrogates.hpp"
#include "deferlab/synth_suites.hpp"

namespace deferlab {

// Prediction rule of each surrogate over a flat [class | expert] score vector.
// Augmented kinds take the argmax of the shared vector. OvA classifies iff
// max g > max s; Decoupled classifies iff max p >= max u. Inner ties go to
// the lowest index.
Action route(const SurrogateConfig& cfg, int K, std::span<const double> scores);

// Decoupled rule stated directly on probabilities.
Action route_decoupled(std::span<const double> p, std::span<const double> u);

// Realized 0-1 defer loss: 1{k != y} for Classify(k), 1{m_j != y} for Defer(j).
double defer_loss(const Action& act, const Sample& s);

struct Metrics {
  double system_accuracy = 0.0;
  double empirical_defer_loss = 0.0;
  double coverage = 0.0;
  double exact_regret = 0.0;
  // Rare-specialist suite: Pr(route = specialist | R), and the same restricted
  // to samples where both experts are correct.
  std::optional<double> specialist_selection;
  std::optional<double> shared_correct_routing;
  // Shared-acceptability suite: among deferrals on D, the fraction routed to
  // the sector expert. Empty when the model never defers on D.
  std::optional<double> best_expert_selection;
};

std::vector<Action> decide(const LinearModel& model, const SurrogateConfig& cfg,
                           const LabeledDataset& data);

Metrics evaluate_decisions(std::span<const Action> decisions, const LabeledDataset& data);
Metrics evaluate(const LinearModel& model, const SurrogateConfig& cfg, const LabeledDataset& data);

// Surrogate-to-defer excess risk transfer constant, where one is known.
std::optional<double> transfer_constant(SurrogateKind kind, double beta, int K, int J);

struct RegionRecovery {
  int region = 0;
  std::size_t count = 0;
  // Per coordinate, the max over samples in the region of the absolute error.
  std::vector<double> expert_max_abs;  // |u_j - alpha_j|
  std::vector<double> class_max_abs;   // |p_k - eta_k|
  // Per coordinate, the mean over samples of the absolute error.
  std::vector<double> expert_mean_abs;
  std::vector<double> class_mean_abs;

  double expert_worst() const;
  double class_worst() const;
};

// Compares a split-head model's probabilities (softmax class head, sigmoid
// expert heads) against the analytic eta and alpha, region by region.
std::vector<RegionRecovery> fit_recovery_check(const LinearModel& model,
                                               const LabeledDataset& data);

}  // namespace deferlab
