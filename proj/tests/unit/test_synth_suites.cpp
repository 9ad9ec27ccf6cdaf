#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "deferlab/synth_suites.hpp"

using namespace deferlab;

namespace {

SuiteSpec sized(SuiteKind kind, int n_test, std::uint64_t seed = 0) {
  SuiteSpec s = SuiteSpec::defaults(kind);
  s.n_train = 10;
  s.n_val = 10;
  s.n_test = n_test;
  s.seed = seed;
  return s;
}

bool same(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto &sa = a.samples[i], &sb = b.samples[i];
    if (sa.x != sb.x || sa.y != sb.y || sa.m != sb.m) return false;
    const auto &ta = a.truths[i], &tb = b.truths[i];
    if (ta.eta != tb.eta || ta.alpha != tb.alpha || ta.region != tb.region || ta.sector != tb.sector)
      return false;
  }
  return true;
}

}  // namespace

TEST(SuiteSpec, DefaultsAndValidation) {
  const SuiteSpec n = SuiteSpec::defaults(SuiteKind::NestedRedundant);
  EXPECT_EQ(n.K, 16);
  EXPECT_EQ(n.J, 24);
  EXPECT_EQ(n.n_train, 900);
  EXPECT_EQ(n.n_test, 8000);
  const SuiteSpec r = SuiteSpec::defaults(SuiteKind::RareSpecialist);
  EXPECT_EQ(r.K, 2);
  EXPECT_EQ(r.J, 2);
  EXPECT_EQ(r.feature_dim(), 3);
  const SuiteSpec s = SuiteSpec::defaults(SuiteKind::SharedAcceptability);
  EXPECT_EQ(s.K, 10);
  EXPECT_EQ(s.J, 4);
  EXPECT_EQ(s.feature_dim(), 14);
  EXPECT_EQ(SuiteSpec::defaults(SuiteKind::CouplingDistractors).K, 3);

  SuiteSpec bad = r;
  bad.J = 3;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = n;
  bad.n_test = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = s;
  bad.J = 1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = SuiteSpec::defaults(SuiteKind::CouplingDistractors);
  bad.expert_rate = 1.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  for (SuiteKind k : {SuiteKind::NestedRedundant, SuiteKind::RareSpecialist,
                      SuiteKind::SharedAcceptability, SuiteKind::CouplingDistractors})
    EXPECT_EQ(parse_suite(to_string(k)), k);
  EXPECT_THROW(parse_suite("cifar"), std::invalid_argument);
}

TEST(Nested, AlphaEndpoints) {
  const std::vector<double> a = nested_alpha(24, true);
  EXPECT_DOUBLE_EQ(a.front(), 0.99);
  EXPECT_NEAR(a.back(), 0.75, 1e-15);
  for (std::size_t j = 1; j < a.size(); ++j) EXPECT_LT(a[j], a[j - 1]);
  for (int j = 0; j < 24; ++j)
    EXPECT_NEAR(a[static_cast<std::size_t>(j)], 0.99 - 0.24 * std::log(1.0 + j) / std::log(24.0), 1e-15);
  const std::vector<double> c = nested_alpha(24, false);
  EXPECT_DOUBLE_EQ(c.front(), 0.04);
  EXPECT_NEAR(c.back(), 0.002, 1e-15);
}

TEST(Nested, CorrectSetsFormAChain) {
  const LabeledDataset ds = generate(sized(SuiteKind::NestedRedundant, 3000), Split::Test);
  for (const Sample& s : ds.samples) {
    for (std::size_t j = 1; j < s.m.size(); ++j)
      if (s.m[j] == s.y) EXPECT_EQ(s.m[j - 1], s.y);
    for (int m : s.m) {
      EXPECT_GE(m, 0);
      EXPECT_LT(m, 16);
    }
  }
}

TEST(Nested, EmpiricalRatesMatchAlpha) {
  const std::vector<double> alpha = nested_alpha(24, true);
  std::vector<double> hits(24, 0.0);
  double n_d = 0.0;
  for (std::uint64_t seed = 0; n_d < 1e5; ++seed) {
    const LabeledDataset ds = generate(sized(SuiteKind::NestedRedundant, 40000, seed), Split::Test);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.truths[i].region != 1) continue;
      n_d += 1.0;
      for (std::size_t j = 0; j < 24; ++j) hits[j] += ds.samples[i].m[j] == ds.samples[i].y;
    }
  }
  for (std::size_t j = 0; j < 24; ++j) EXPECT_NEAR(hits[j] / n_d, alpha[j], 0.01) << j;
}

TEST(RareSpecialist, TableMarginals) {
  // R cells: both 0.55, generalist only 0.05, specialist only 0.20, neither 0.20.
  EXPECT_NEAR(0.55 + 0.20, 0.75, 1e-15);
  EXPECT_NEAR(0.55 + 0.05, 0.60, 1e-15);
  EXPECT_NEAR(0.55 / 0.75, 0.7333, 1e-4);
  const LabeledDataset ds = generate(sized(SuiteKind::RareSpecialist, 2000), Split::Test);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const GroundTruth& g = ds.truths[i];
    const Sample& s = ds.samples[i];
    EXPECT_EQ(s.x.size(), 3u);
    EXPECT_EQ(s.x[2], g.region == 1 ? 1.0 : 0.0);
    const int top = s.x[0] >= 0.0 ? 0 : 1;
    EXPECT_EQ(g.eta[static_cast<std::size_t>(top)], g.region ? 0.60 : 0.90);
    EXPECT_EQ(g.alpha, g.region ? (std::vector<double>{0.60, 0.75}) : (std::vector<double>{0.45, 0.15}));
  }
}

TEST(RareSpecialist, EmpiricalCells) {
  double cells[2][2] = {{0, 0}, {0, 0}};
  double n_r = 0.0, n_off = 0.0, gen_off = 0.0, spec_off = 0.0;
  for (std::uint64_t seed = 0; n_r < 1e5; ++seed) {
    const LabeledDataset ds = generate(sized(SuiteKind::RareSpecialist, 200000, seed), Split::Test);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const Sample& s = ds.samples[i];
      const int g = s.m[0] == s.y, p = s.m[1] == s.y;
      if (ds.truths[i].region == 1) {
        cells[g][p] += 1.0;
        n_r += 1.0;
      } else {
        gen_off += g;
        spec_off += p;
        n_off += 1.0;
      }
    }
  }
  EXPECT_NEAR(cells[1][1] / n_r, 0.55, 0.01);
  EXPECT_NEAR(cells[1][0] / n_r, 0.05, 0.01);
  EXPECT_NEAR(cells[0][1] / n_r, 0.20, 0.01);
  EXPECT_NEAR(cells[0][0] / n_r, 0.20, 0.01);
  EXPECT_NEAR(n_r / (n_r + n_off), 0.15, 0.01);
  EXPECT_NEAR(gen_off / n_off, 0.45, 0.01);
  EXPECT_NEAR(spec_off / n_off, 0.15, 0.01);
}

TEST(SharedAcceptability, Marginals) {
  const LabeledDataset ds = generate(sized(SuiteKind::SharedAcceptability, 3000), Split::Test);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const GroundTruth& g = ds.truths[i];
    if (g.region == 1) {
      ASSERT_GE(g.sector, 0);
      for (int j = 0; j < 4; ++j)
        EXPECT_NEAR(g.alpha[static_cast<std::size_t>(j)], j == g.sector ? 0.93 : 0.37, 1e-15);
      EXPECT_GT(ds.samples[i].x[static_cast<std::size_t>(10 + g.sector)], 1.5);
    } else {
      EXPECT_EQ(g.sector, -1);
      for (double a : g.alpha) EXPECT_EQ(a, 0.05);
    }
  }
}

TEST(SharedAcceptability, EmpiricalEvents) {
  double n_d = 0.0, all = 0.0, q_other = 0.0, q_only = 0.0, other_only = 0.0, none = 0.0;
  double two_plus = 0.0, q_hits = 0.0, rest_hits = 0.0;
  for (std::uint64_t seed = 0; n_d < 1e5; ++seed) {
    const LabeledDataset ds = generate(sized(SuiteKind::SharedAcceptability, 60000, seed), Split::Test);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const GroundTruth& g = ds.truths[i];
      if (g.region != 1) continue;
      const Sample& s = ds.samples[i];
      int count = 0;
      for (int m : s.m) count += m == s.y;
      const bool q = s.m[static_cast<std::size_t>(g.sector)] == s.y;
      n_d += 1.0;
      q_hits += q;
      rest_hits += count - (q ? 1 : 0);
      all += count == 4;
      q_other += q && count == 2;
      q_only += q && count == 1;
      other_only += !q && count == 1;
      none += count == 0;
      two_plus += count >= 2;
    }
  }
  EXPECT_NEAR(all / n_d, 0.10, 0.01);
  EXPECT_NEAR(q_other / n_d, 0.78, 0.01);
  EXPECT_NEAR(q_only / n_d, 0.05, 0.01);
  EXPECT_NEAR(other_only / n_d, 0.03, 0.01);
  EXPECT_NEAR(none / n_d, 0.04, 0.01);
  EXPECT_NEAR(two_plus / n_d, 0.88, 0.01);
  EXPECT_NEAR(q_hits / n_d, 0.93, 0.01);
  EXPECT_NEAR(rest_hits / (3.0 * n_d), 0.37, 0.01);
}

TEST(CouplingDistractors, Rates) {
  SuiteSpec spec = sized(SuiteKind::CouplingDistractors, 100000);
  spec.J = 5;
  const LabeledDataset ds = generate(spec, Split::Test);
  double n_d = 0.0, hit_d = 0.0, n_c = 0.0, hit_c = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sample& s = ds.samples[i];
    for (std::size_t j = 1; j < s.m.size(); ++j) EXPECT_NE(s.m[j], s.y);
    const bool ok = s.m[0] == s.y;
    if (ds.truths[i].region == 1) {
      n_d += 1.0;
      hit_d += ok;
    } else {
      n_c += 1.0;
      hit_c += ok;
    }
    EXPECT_EQ(ds.truths[i].alpha[1], 0.0);
  }
  EXPECT_NEAR(hit_d / n_d, 0.9, 0.01);
  EXPECT_NEAR(hit_c / n_c, 0.1, 0.01);

  spec.J = 1;
  spec.n_test = 100;
  const LabeledDataset single = generate(spec, Split::Test);
  for (const Sample& s : single.samples) EXPECT_EQ(s.m.size(), 1u);
}

TEST(Suites, SameSeedIsBitIdentical) {
  for (SuiteKind k : {SuiteKind::NestedRedundant, SuiteKind::RareSpecialist,
                      SuiteKind::SharedAcceptability, SuiteKind::CouplingDistractors}) {
    const SuiteSpec spec = sized(k, 500, 42);
    EXPECT_TRUE(same(generate(spec, Split::Test), generate(spec, Split::Test)));
    SuiteSpec other = spec;
    other.seed = 43;
    EXPECT_FALSE(same(generate(spec, Split::Test), generate(other, Split::Test)));
    EXPECT_FALSE(same(generate(spec, Split::Val), generate(spec, Split::Test)));
  }
}

TEST(Suites, PrefixStable) {
  // Counter streams are keyed by sample index, so a longer split extends a shorter one.
  const LabeledDataset a = generate(sized(SuiteKind::NestedRedundant, 100), Split::Test);
  const LabeledDataset b = generate(sized(SuiteKind::NestedRedundant, 300), Split::Test);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].x, b.samples[i].x);
    EXPECT_EQ(a.samples[i].m, b.samples[i].m);
  }
}

TEST(Suites, BayesActionFollowsDocumentedRule) {
  for (SuiteKind k : {SuiteKind::NestedRedundant, SuiteKind::RareSpecialist,
                      SuiteKind::SharedAcceptability, SuiteKind::CouplingDistractors}) {
    const LabeledDataset ds = generate(sized(k, 2000, 3), Split::Test);
    for (const GroundTruth& g : ds.truths) {
      EXPECT_NO_THROW(g.validate());
      const Action a = bayes_action(g);
      if (g.region == 1) {
        const int expect = k == SuiteKind::RareSpecialist ? 1
                           : k == SuiteKind::SharedAcceptability ? g.sector
                                                                 : 0;
        EXPECT_EQ(a, Action::defer(expect)) << to_string(k);
      } else {
        EXPECT_TRUE(a.is_classify()) << to_string(k);
      }
    }
  }
}

TEST(Suites, TruthsAreClosedForm) {
  const LabeledDataset ds = generate(sized(SuiteKind::NestedRedundant, 1000, 5), Split::Test);
  const std::vector<double> d = nested_alpha(24, true), c = nested_alpha(24, false);
  for (const GroundTruth& g : ds.truths) {
    EXPECT_EQ(g.alpha, g.region ? d : c);
    if (g.region) {
      for (double e : g.eta) EXPECT_EQ(e, 1.0 / 16);
    } else {
      EXPECT_EQ(*std::max_element(g.eta.begin(), g.eta.end()), 0.998);
    }
  }
}
