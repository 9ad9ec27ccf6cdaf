#include "deferlab/eval_router.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace deferlab {

namespace {

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

Action route_decoupled(std::span<const double> p, std::span<const double> u) {
  if (p.empty() || u.empty()) throw std::invalid_argument("route_decoupled: empty head");
  const std::size_t k = argmax(p);
  const std::size_t j = argmax(u);
  if (p[k] >= u[j]) return Action::classify(static_cast<int>(k));
  return Action::defer(static_cast<int>(j));
}

Action route(const SurrogateConfig& cfg, int K, std::span<const double> scores) {
  if (K < 1 || scores.size() <= static_cast<std::size_t>(K))
    throw std::invalid_argument("route: scores must hold K class and at least one expert entry");
  const auto k = static_cast<std::size_t>(K);
  if (uses_augmented_scores(cfg.kind)) {
    const std::size_t i = argmax(scores);
    return i < k ? Action::classify(static_cast<int>(i))
                 : Action::defer(static_cast<int>(i - k));
  }
  const auto g = scores.first(k);
  const auto s = scores.subspan(k);
  if (cfg.kind == SurrogateKind::OvA) {
    const std::size_t kb = argmax(g);
    const std::size_t jb = argmax(s);
    if (g[kb] > s[jb]) return Action::classify(static_cast<int>(kb));
    return Action::defer(static_cast<int>(jb));
  }
  std::vector<double> u(s.size());
  std::transform(s.begin(), s.end(), u.begin(), numkit::sigmoid);
  return route_decoupled(numkit::softmax(g), u);
}

double defer_loss(const Action& act, const Sample& s) {
  if (act.is_classify()) return act.index == s.y ? 0.0 : 1.0;
  return s.m.at(static_cast<std::size_t>(act.index)) == s.y ? 0.0 : 1.0;
}

std::vector<Action> decide(const LinearModel& model, const SurrogateConfig& cfg,
                           const LabeledDataset& data) {
  std::vector<Action> out;
  out.reserve(data.size());
  for (const Sample& s : data.samples) out.push_back(route(cfg, model.K, model.logits(s.x)));
  return out;
}

Metrics evaluate_decisions(std::span<const Action> decisions, const LabeledDataset& data) {
  if (decisions.size() != data.size())
    throw std::invalid_argument("evaluate: decision count does not match the dataset");
  if (data.empty()) throw std::invalid_argument("evaluate: empty dataset");
  const double n = static_cast<double>(data.size());

  Metrics m;
  double risk = 0.0, loss = 0.0, classified = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    risk += conditional_risk(decisions[i], data.truths[i]);
    loss += defer_loss(decisions[i], data.samples[i]);
    if (decisions[i].is_classify()) classified += 1.0;
  }
  m.system_accuracy = 1.0 - risk / n;
  m.empirical_defer_loss = loss / n;
  m.coverage = classified / n;
  m.exact_regret = exact_regret(decisions, data.truths);

  if (data.spec.suite == SuiteKind::RareSpecialist) {
    constexpr int kSpecialist = 1;
    double in_r = 0, picked = 0, shared = 0, shared_picked = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.truths[i].region != 1) continue;
      const bool spec = decisions[i] == Action::defer(kSpecialist);
      in_r += 1;
      picked += spec ? 1 : 0;
      const Sample& s = data.samples[i];
      if (s.m[0] == s.y && s.m[1] == s.y) {
        shared += 1;
        shared_picked += spec ? 1 : 0;
      }
    }
    if (in_r > 0) m.specialist_selection = picked / in_r;
    if (shared > 0) m.shared_correct_routing = shared_picked / shared;
  }
  if (data.spec.suite == SuiteKind::SharedAcceptability) {
    double deferred = 0, best = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.truths[i].region != 1 || !decisions[i].is_defer()) continue;
      deferred += 1;
      best += decisions[i].index == data.truths[i].sector ? 1 : 0;
    }
    if (deferred > 0) m.best_expert_selection = best / deferred;
  }
  return m;
}

Metrics evaluate(const LinearModel& model, const SurrogateConfig& cfg, const LabeledDataset& data) {
  const std::vector<Action> decisions = decide(model, cfg, data);
  return evaluate_decisions(decisions, data);
}

std::optional<double> transfer_constant(SurrogateKind kind, double beta, int K, int J) {
  switch (kind) {
    case SurrogateKind::Decoupled:
      if (!(beta > 0.0)) throw std::invalid_argument("transfer_constant: beta must be positive");
      return std::max(2.0 * std::numbers::sqrt2, std::sqrt(2.0 / beta));
    case SurrogateKind::AddCE:
      return std::sqrt(2.0 * (J + 1));
    case SurrogateKind::Mao25:
      return static_cast<double>(K + J);
    case SurrogateKind::PiCCE:
    case SurrogateKind::ASM:
    case SurrogateKind::OvA:
      return std::nullopt;
  }
  return std::nullopt;
}

double RegionRecovery::expert_worst() const {
  return expert_max_abs.empty() ? 0.0 : *std::max_element(expert_max_abs.begin(), expert_max_abs.end());
}

double RegionRecovery::class_worst() const {
  return class_max_abs.empty() ? 0.0 : *std::max_element(class_max_abs.begin(), class_max_abs.end());
}

std::vector<RegionRecovery> fit_recovery_check(const LinearModel& model,
                                               const LabeledDataset& data) {
  if (model.layout != HeadLayout::Split)
    throw std::invalid_argument("fit_recovery_check: needs a split-head model");
  std::map<int, RegionRecovery> by_region;
  const auto K = static_cast<std::size_t>(model.K);
  const auto J = static_cast<std::size_t>(model.J);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const GroundTruth& gt = data.truths[i];
    RegionRecovery& rr = by_region[gt.region];
    if (rr.count == 0) {
      rr.region = gt.region;
      rr.expert_max_abs.assign(J, 0.0);
      rr.expert_mean_abs.assign(J, 0.0);
      rr.class_max_abs.assign(K, 0.0);
      rr.class_mean_abs.assign(K, 0.0);
    }
    ++rr.count;
    const std::vector<double> z = model.logits(data.samples[i].x);
    const std::vector<double> p = numkit::softmax(std::span<const double>(z).first(K));
    for (std::size_t k = 0; k < K; ++k) {
      const double e = std::abs(p[k] - gt.eta[k]);
      rr.class_max_abs[k] = std::max(rr.class_max_abs[k], e);
      rr.class_mean_abs[k] += e;
    }
    for (std::size_t j = 0; j < J; ++j) {
      const double e = std::abs(numkit::sigmoid(z[K + j]) - gt.alpha[j]);
      rr.expert_max_abs[j] = std::max(rr.expert_max_abs[j], e);
      rr.expert_mean_abs[j] += e;
    }
  }
  std::vector<RegionRecovery> out;
  for (auto& [region, rr] : by_region) {
    const double n = static_cast<double>(rr.count);
    for (double& v : rr.class_mean_abs) v /= n;
    for (double& v : rr.expert_mean_abs) v /= n;
    out.push_back(std::move(rr));
  }
  return out;
}

}  // namespace deferlab
