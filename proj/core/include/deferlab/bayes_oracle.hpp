#pragma once

#include <span>
#include <string>
#include <vector>

namespace deferlab {

// Analytic conditional quantities at one input: class posterior eta (K, on
// the simplex) and expert utilities alpha (J, each in [0, 1]).
struct GroundTruth {
  std::vector<double> eta;
  std::vector<double> alpha;
  // Suite-specific region tag: 1 for the defer-favourable region (D or R), 0 otherwise.
  int region = 0;
  // Sector expert on the shared-acceptability suite, -1 elsewhere.
  int sector = -1;

  void validate() const;
};

struct Action {
  enum class Kind { Classify, Defer };
  Kind kind = Kind::Classify;
  int index = 0;

  static Action classify(int k) { return {Kind::Classify, k}; }
  static Action defer(int j) { return {Kind::Defer, j}; }
  bool is_classify() const { return kind == Kind::Classify; }
  bool is_defer() const { return kind == Kind::Defer; }

  friend bool operator==(const Action&, const Action&) = default;
};

std::string to_string(const Action& a);

// Classify(argmax eta) when max eta >= max alpha, else Defer(argmax alpha).
// Inner ties go to the lowest index.
Action bayes_action(const GroundTruth& gt);

// 1 - eta_k for Classify(k), 1 - alpha_j for Defer(j).
double conditional_risk(const Action& act, const GroundTruth& gt);

// min over all K + J actions of the conditional risk.
double bayes_risk(const GroundTruth& gt);

// Mean over points of conditional_risk(decision) - bayes_risk. Throws
// std::invalid_argument on a length mismatch.
double exact_regret(std::span<const Action> decisions, std::span<const GroundTruth> truths);

}  // namespace deferlab
