#include "deferlab/bayes_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace deferlab {

void GroundTruth::validate() const {
  if (eta.empty()) throw std::invalid_argument("GroundTruth: empty eta");
  double total = 0.0;
  for (double e : eta) {
    if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("GroundTruth: eta outside [0, 1]");
    total += e;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("GroundTruth: eta not on simplex");
  for (double a : alpha)
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("GroundTruth: alpha outside [0, 1]");
}

std::string to_string(const Action& a) {
  return (a.is_classify() ? "classify(" : "defer(") + std::to_string(a.index) + ")";
}

namespace {

std::size_t argmax_lowest(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

Action bayes_action(const GroundTruth& gt) {
  const std::size_t k = argmax_lowest(gt.eta);
  if (gt.alpha.empty()) return Action::classify(static_cast<int>(k));
  const std::size_t j = argmax_lowest(gt.alpha);
  if (gt.eta[k] >= gt.alpha[j]) return Action::classify(static_cast<int>(k));
  return Action::defer(static_cast<int>(j));
}

double conditional_risk(const Action& act, const GroundTruth& gt) {
  const auto& v = act.is_classify() ? gt.eta : gt.alpha;
  if (act.index < 0 || static_cast<std::size_t>(act.index) >= v.size())
    throw std::out_of_range("conditional_risk: action " + to_string(act) + " out of range");
  return 1.0 - v[static_cast<std::size_t>(act.index)];
}

double bayes_risk(const GroundTruth& gt) { return conditional_risk(bayes_action(gt), gt); }

double exact_regret(std::span<const Action> decisions, std::span<const GroundTruth> truths) {
  if (decisions.size() != truths.size())
    throw std::invalid_argument("exact_regret: " + std::to_string(decisions.size()) +
                                " decisions for " + std::to_string(truths.size()) + " truths");
  if (decisions.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < decisions.size(); ++i)
    total += conditional_risk(decisions[i], truths[i]) - bayes_risk(truths[i]);
  return total / static_cast<double>(decisions.size());
}

}  // namespace deferlab
