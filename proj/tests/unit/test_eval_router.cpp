#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "deferlab/eval_router.hpp"
#include "deferlab/trainer.hpp"

using namespace deferlab;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

SurrogateConfig cfg_of(SurrogateKind kind) {
  SurrogateConfig c;
  c.kind = kind;
  return c;
}

LabeledDataset small(SuiteKind kind, int n, std::uint64_t seed = 0) {
  SuiteSpec spec = SuiteSpec::defaults(kind);
  spec.n_test = n;
  spec.seed = seed;
  return generate(spec, Split::Test);
}

}  // namespace

TEST(Route, DecoupledDefersWhenExpertBeatsClassifier) {
  const std::vector<double> z{std::log(0.40), std::log(0.35), std::log(0.25), logit(0.70)};
  EXPECT_EQ(route(cfg_of(SurrogateKind::Decoupled), 3, z), Action::defer(0));
  EXPECT_EQ(route_decoupled(std::vector<double>{0.40, 0.35, 0.25}, std::vector<double>{0.70}),
            Action::defer(0));
}

TEST(Route, OvAClassifiesOnLargerSigmoid) {
  const std::vector<double> z{logit(0.77), logit(0.2), logit(0.70), logit(0.1)};
  EXPECT_EQ(route(cfg_of(SurrogateKind::OvA), 2, z), Action::classify(0));
}

TEST(Route, TieRules) {
  // Decoupled uses >=, OvA uses strict >.
  EXPECT_EQ(route_decoupled(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5}), Action::classify(0));
  EXPECT_EQ(route(cfg_of(SurrogateKind::OvA), 2, std::vector<double>{0.3, 0.1, 0.3}), Action::defer(0));
  EXPECT_EQ(route(cfg_of(SurrogateKind::AddCE), 2, std::vector<double>{0.0, 1.0, 1.0}), Action::classify(1));
  EXPECT_EQ(route(cfg_of(SurrogateKind::PiCCE), 1, std::vector<double>{0.0, 2.0, 2.0}), Action::defer(0));
}

TEST(Route, AugmentedOneHot) {
  for (SurrogateKind k : {SurrogateKind::AddCE, SurrogateKind::PiCCE, SurrogateKind::Mao25, SurrogateKind::ASM}) {
    for (std::size_t i = 0; i < 5; ++i) {
      std::vector<double> z(5, 0.0);
      z[i] = 1.0;
      const Action a = route(cfg_of(k), 3, z);
      EXPECT_EQ(a, i < 3 ? Action::classify(static_cast<int>(i)) : Action::defer(static_cast<int>(i) - 3));
    }
  }
  EXPECT_THROW(route(cfg_of(SurrogateKind::AddCE), 3, std::vector<double>{0, 0, 0}), std::invalid_argument);
}

TEST(Route, DecoupledDependsOnlyOnMaxima) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> p(4), q(3);
    double s = 0.0;
    for (double& v : p) s += (v = u(rng));
    for (double& v : p) v /= s;
    for (double& v : q) v = u(rng);
    const Action a = route_decoupled(p, q);
    const std::size_t kp = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    const std::size_t jq = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
    std::vector<double> p2 = p, q2 = q;
    for (std::size_t k = 0; k < p2.size(); ++k)
      if (k != kp) p2[k] *= u(rng);
    for (std::size_t j = 0; j < q2.size(); ++j)
      if (j != jq) q2[j] *= u(rng);
    EXPECT_EQ(route_decoupled(p2, q2), a);
  }
}

TEST(Evaluate, BayesDecisionsHaveZeroRegret) {
  for (SuiteKind k : {SuiteKind::NestedRedundant, SuiteKind::RareSpecialist,
                      SuiteKind::SharedAcceptability, SuiteKind::CouplingDistractors}) {
    const LabeledDataset ds = small(k, 3000, 2);
    std::vector<Action> acts;
    double bayes = 0.0;
    for (const GroundTruth& g : ds.truths) {
      acts.push_back(bayes_action(g));
      bayes += bayes_risk(g);
    }
    const Metrics m = evaluate_decisions(acts, ds);
    EXPECT_EQ(m.exact_regret, 0.0);
    EXPECT_NEAR(m.system_accuracy, 1.0 - bayes / static_cast<double>(ds.size()), 1e-12);
    EXPECT_GE(m.coverage, 0.0);
    EXPECT_LE(m.coverage, 1.0);
    if (k == SuiteKind::RareSpecialist) {
      EXPECT_EQ(m.specialist_selection.value(), 1.0);
      EXPECT_EQ(m.shared_correct_routing.value(), 1.0);
    }
    if (k == SuiteKind::SharedAcceptability) EXPECT_EQ(m.best_expert_selection.value(), 1.0);
  }
}

TEST(Evaluate, AccuracyPlusRiskIsOne) {
  std::mt19937_64 rng(12);
  const LabeledDataset ds = small(SuiteKind::NestedRedundant, 2000, 4);
  std::uniform_int_distribution<int> pick(0, 39);
  std::vector<Action> acts;
  double risk = 0.0;
  for (const GroundTruth& g : ds.truths) {
    const int i = pick(rng);
    acts.push_back(i < 16 ? Action::classify(i) : Action::defer(i - 16));
    risk += conditional_risk(acts.back(), g);
  }
  const Metrics m = evaluate_decisions(acts, ds);
  EXPECT_NEAR(m.system_accuracy + risk / static_cast<double>(ds.size()), 1.0, 1e-12);
  EXPECT_GT(m.exact_regret, 0.0);
  EXPECT_FALSE(m.specialist_selection.has_value());
}

TEST(Evaluate, AlwaysClassify) {
  const LabeledDataset ds = small(SuiteKind::RareSpecialist, 4000, 1);
  const std::vector<Action> acts(ds.size(), Action::classify(0));
  const Metrics m = evaluate_decisions(acts, ds);
  EXPECT_EQ(m.coverage, 1.0);
  // Classifying counts as not selecting the specialist.
  EXPECT_EQ(m.specialist_selection.value(), 0.0);
  EXPECT_THROW(evaluate_decisions(std::span(acts).first(10), ds), std::invalid_argument);
}

TEST(Evaluate, NoDeferralsLeaveBestExpertEmpty) {
  const LabeledDataset ds = small(SuiteKind::SharedAcceptability, 500, 1);
  const std::vector<Action> acts(ds.size(), Action::classify(0));
  EXPECT_FALSE(evaluate_decisions(acts, ds).best_expert_selection.has_value());
}

TEST(Evaluate, TrainedPiCCEStarvesTheSpecialist) {
  const SuiteData d = generate_all(SuiteSpec::defaults(SuiteKind::RareSpecialist));
  TrainConfig cfg;
  cfg.surrogate.kind = SurrogateKind::PiCCE;
  const TrainResult r = train(d.train, d.val, cfg);
  EXPECT_EQ(evaluate(r.model, cfg.surrogate, d.test).specialist_selection.value(), 0.0);
}

TEST(Evaluate, TrainedDecoupledPicksSectorExpert) {
  const SuiteData d = generate_all(SuiteSpec::defaults(SuiteKind::SharedAcceptability));
  TrainConfig cfg;
  cfg.surrogate.kind = SurrogateKind::Decoupled;
  const TrainResult r = train(d.train, d.val, cfg);
  const Metrics m = evaluate(r.model, cfg.surrogate, d.test);
  EXPECT_EQ(m.best_expert_selection.value(), 1.0);
  EXPECT_LE(m.exact_regret, 0.01);
}

TEST(TransferConstant, Values) {
  EXPECT_NEAR(*transfer_constant(SurrogateKind::Decoupled, 0.5, 16, 24), 2.0 * std::numbers::sqrt2, 1e-15);
  EXPECT_NEAR(*transfer_constant(SurrogateKind::Decoupled, 0.25, 16, 24), 2.0 * std::numbers::sqrt2, 1e-15);
  EXPECT_NEAR(*transfer_constant(SurrogateKind::Decoupled, 0.125, 16, 24), 4.0, 1e-15);
  EXPECT_NEAR(*transfer_constant(SurrogateKind::AddCE, 0.5, 16, 24), std::sqrt(50.0), 1e-15);
  EXPECT_EQ(*transfer_constant(SurrogateKind::Mao25, 0.5, 16, 24), 40.0);
  for (SurrogateKind k : {SurrogateKind::PiCCE, SurrogateKind::ASM, SurrogateKind::OvA})
    EXPECT_FALSE(transfer_constant(k, 0.5, 16, 24).has_value());
  EXPECT_THROW(transfer_constant(SurrogateKind::Decoupled, 0.0, 2, 2), std::invalid_argument);
}

TEST(Recovery, ExactModelRecoversTruth) {
  // Region indicator features; the model stores log eta and logit alpha directly.
  SuiteSpec spec = SuiteSpec::defaults(SuiteKind::CouplingDistractors);
  spec.J = 2;
  LabeledDataset ds;
  ds.spec = spec;
  const std::vector<double> eta_d{0.2, 0.3, 0.5}, eta_c{0.7, 0.2, 0.1};
  const std::vector<double> alpha_d{0.9, 0.05}, alpha_c{0.1, 0.3};
  for (int i = 0; i < 50; ++i) {
    const bool d = i % 3 == 0;
    ds.samples.push_back(Sample{{d ? 1.0 : 0.0, d ? 0.0 : 1.0}, 0, {0, 1}});
    ds.truths.push_back(GroundTruth{d ? eta_d : eta_c, d ? alpha_d : alpha_c, d ? 1 : 0, -1});
  }
  LinearModel m = LinearModel::zeros(HeadLayout::Split, 3, 2, 2);
  for (std::size_t k = 0; k < 3; ++k) {
    m.weights[k * 2 + 0] = std::log(eta_d[k]);
    m.weights[k * 2 + 1] = std::log(eta_c[k]);
  }
  for (std::size_t j = 0; j < 2; ++j) {
    m.weights[(3 + j) * 2 + 0] = logit(alpha_d[j]);
    m.weights[(3 + j) * 2 + 1] = logit(alpha_c[j]);
  }
  const auto rec = fit_recovery_check(m, ds);
  ASSERT_EQ(rec.size(), 2u);
  for (const RegionRecovery& r : rec) {
    EXPECT_LT(r.expert_worst(), 1e-15);
    EXPECT_LT(r.class_worst(), 1e-15);
  }
  EXPECT_EQ(rec[0].count + rec[1].count, 50u);
}

TEST(Recovery, UntrainedModelFails) {
  const LabeledDataset ds = small(SuiteKind::NestedRedundant, 1000);
  const LinearModel m = LinearModel::zeros(HeadLayout::Split, 16, 24, 16);
  for (const RegionRecovery& r : fit_recovery_check(m, ds)) {
    EXPECT_GT(r.expert_worst(), 0.03);
    // Uniform p is already exact on the defer region.
    if (r.region == 0) EXPECT_GT(r.class_worst(), 0.03);
  }
  EXPECT_THROW(fit_recovery_check(LinearModel::zeros(HeadLayout::Augmented, 16, 24, 16), ds),
               std::invalid_argument);
}
