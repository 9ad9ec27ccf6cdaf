#include "deferlab/synth_suites.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "deferlab/rng.hpp"

namespace deferlab {

std::string_view to_string(SuiteKind kind) {
  switch (kind) {
    case SuiteKind::NestedRedundant: return "nested_redundant";
    case SuiteKind::RareSpecialist: return "rare_specialist";
    case SuiteKind::SharedAcceptability: return "shared_acceptability";
    case SuiteKind::CouplingDistractors: return "coupling_distractors";
  }
  return "unknown";
}

SuiteKind parse_suite(std::string_view name) {
  for (SuiteKind k : {SuiteKind::NestedRedundant, SuiteKind::RareSpecialist,
                      SuiteKind::SharedAcceptability, SuiteKind::CouplingDistractors})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown suite '" + std::string(name) + "'");
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

SuiteSpec SuiteSpec::defaults(SuiteKind kind) {
  SuiteSpec s;
  s.suite = kind;
  switch (kind) {
    case SuiteKind::NestedRedundant:
      s.K = 16, s.J = 24, s.n_train = 900, s.n_val = 2000, s.n_test = 8000;
      break;
    case SuiteKind::RareSpecialist:
      s.K = 2, s.J = 2, s.n_train = 7000, s.n_val = 2000, s.n_test = 18000;
      break;
    case SuiteKind::SharedAcceptability:
      s.K = 10, s.J = 4, s.n_train = 1000, s.n_val = 2000, s.n_test = 12000;
      break;
    case SuiteKind::CouplingDistractors:
      s.K = 3, s.J = 5, s.n_train = 4500, s.n_val = 2000, s.n_test = 7000;
      break;
  }
  return s;
}

int SuiteSpec::feature_dim() const {
  switch (suite) {
    case SuiteKind::NestedRedundant: return K;
    case SuiteKind::RareSpecialist: return 3;
    case SuiteKind::SharedAcceptability: return K + J;
    case SuiteKind::CouplingDistractors: return K;
  }
  return K;
}

void SuiteSpec::validate() const {
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument(std::string(to_string(suite)) + ": " + why);
  };
  if (n_train < 1 || n_val < 1 || n_test < 1) fail("split sizes must be positive");
  if (K < 2) fail("K must be >= 2");
  if (J < 1) fail("J must be >= 1");
  switch (suite) {
    case SuiteKind::NestedRedundant: break;
    case SuiteKind::RareSpecialist:
      if (K != 2 || J != 2) fail("requires K = 2 and J = 2 (generalist, specialist)");
      break;
    case SuiteKind::SharedAcceptability:
      if (J < 2) fail("requires J >= 2");
      break;
    case SuiteKind::CouplingDistractors:
      if (!(expert_rate >= 0.0 && expert_rate <= 1.0) ||
          !(offregion_rate >= 0.0 && offregion_rate <= 1.0))
        fail("expert rates must lie in [0, 1]");
      break;
  }
}

std::vector<double> nested_alpha(int J, bool defer_region) {
  if (J < 1) throw std::invalid_argument("nested_alpha: J must be >= 1");
  std::vector<double> alpha(static_cast<std::size_t>(J));
  const double hi = defer_region ? 0.99 : 0.04;
  const double lo = defer_region ? 0.75 : 0.002;
  for (int j = 0; j < J; ++j) {
    // A single expert has spacing 0 (log(1) / log(1) is taken as 0).
    const double rho = J == 1 ? 0.0 : std::log(1.0 + j) / std::log(static_cast<double>(J));
    alpha[static_cast<std::size_t>(j)] = hi - (hi - lo) * rho;
  }
  return alpha;
}

namespace {

constexpr double kNoiseStd = 0.05;
constexpr double kAnchorPosterior = 0.998;

// Draw purposes; each gets its own counter stream per sample.
enum Purpose : std::uint64_t {
  kRegion = 1,
  kAnchor = 2,
  kFeature = 3,
  kLabel = 4,
  kExpertLatent = 5,
  kWrongLabel = 6,
  kSector = 7,
  kOtherExpert = 8,
};

class SampleStreams {
 public:
  SampleStreams(const SuiteSpec& spec, Split split, std::size_t index)
      : seed_(spec.seed),
        suite_(static_cast<std::uint64_t>(spec.suite)),
        split_(static_cast<std::uint64_t>(split)),
        index_(index) {}

  CounterStream operator()(Purpose p) const {
    return CounterStream::keyed(seed_, suite_, split_, index_, static_cast<std::uint64_t>(p));
  }
  CounterStream operator()(Purpose p, std::uint64_t sub) const {
    return CounterStream::keyed(seed_, suite_, split_, index_, static_cast<std::uint64_t>(p), sub);
  }

 private:
  std::uint64_t seed_, suite_, split_, index_;
};

int count_for(const SuiteSpec& spec, Split split) {
  switch (split) {
    case Split::Train: return spec.n_train;
    case Split::Val: return spec.n_val;
    case Split::Test: return spec.n_test;
  }
  return 0;
}

// Uniform over [0, K) \ {y}, by shifting a draw from [0, K-1) past y.
int wrong_label(CounterStream rng, int K, int y) {
  const int w = static_cast<int>(rng.below(static_cast<std::uint64_t>(K - 1)));
  return w >= y ? w + 1 : w;
}

LabeledDataset empty_dataset(const SuiteSpec& spec, Split split) {
  spec.validate();
  LabeledDataset ds;
  ds.spec = spec;
  ds.split = split;
  const auto n = static_cast<std::size_t>(count_for(spec, split));
  ds.samples.reserve(n);
  ds.truths.reserve(n);
  return ds;
}

// Near-deterministic class posterior around an anchor class.
std::vector<double> anchored_eta(int K, int anchor) {
  std::vector<double> eta(static_cast<std::size_t>(K),
                          (1.0 - kAnchorPosterior) / static_cast<double>(K - 1));
  eta[static_cast<std::size_t>(anchor)] = kAnchorPosterior;
  return eta;
}

int draw_anchored_label(CounterStream rng, int K, int anchor) {
  if (rng.uniform() < kAnchorPosterior) return anchor;
  return wrong_label(CounterStream(rng.key() ^ 0x5bd1e995ull), K, anchor);
}

// Class block shared by the nested and coupling suites (and the class half of
// the shared suite): on the defer region the label is uniform and every class
// feature sits at `level`; off it one anchor class feature is shifted to 5.
struct ClassPart {
  std::vector<double> x;
  std::vector<double> eta;
  int y = 0;
};

ClassPart draw_class_part(const SampleStreams& streams, int K, bool defer_region, double level) {
  ClassPart cp;
  CounterStream noise = streams(kFeature);
  cp.x.resize(static_cast<std::size_t>(K));
  if (defer_region) {
    cp.eta.assign(static_cast<std::size_t>(K), 1.0 / K);
    cp.y = static_cast<int>(streams(kLabel).below(static_cast<std::uint64_t>(K)));
    for (double& v : cp.x) v = level + kNoiseStd * noise.normal();
  } else {
    const int anchor = static_cast<int>(streams(kAnchor).below(static_cast<std::uint64_t>(K)));
    cp.eta = anchored_eta(K, anchor);
    cp.y = draw_anchored_label(streams(kLabel), K, anchor);
    for (double& v : cp.x) v = kNoiseStd * noise.normal();
    cp.x[static_cast<std::size_t>(anchor)] += 5.0;
  }
  return cp;
}

}  // namespace

LabeledDataset gen_nested_redundant(const SuiteSpec& spec, Split split) {
  if (spec.suite != SuiteKind::NestedRedundant)
    throw std::invalid_argument("gen_nested_redundant: wrong suite in spec");
  LabeledDataset ds = empty_dataset(spec, split);
  const int n = count_for(spec, split);
  const std::vector<double> alpha_d = nested_alpha(spec.J, true);
  const std::vector<double> alpha_c = nested_alpha(spec.J, false);
  for (int i = 0; i < n; ++i) {
    const SampleStreams streams(spec, split, static_cast<std::size_t>(i));
    const bool in_d = streams(kRegion).bernoulli(0.65);
    ClassPart cp = draw_class_part(streams, spec.K, in_d, 3.5);
    const auto& alpha = in_d ? alpha_d : alpha_c;

    Sample s;
    s.x = std::move(cp.x);
    s.y = cp.y;
    s.m.resize(static_cast<std::size_t>(spec.J));
    const double latent = streams(kExpertLatent).uniform();
    for (int j = 0; j < spec.J; ++j) {
      const bool correct = latent <= alpha[static_cast<std::size_t>(j)];
      s.m[static_cast<std::size_t>(j)] =
          correct ? s.y : wrong_label(streams(kWrongLabel, static_cast<std::uint64_t>(j)), spec.K, s.y);
    }
    ds.samples.push_back(std::move(s));
    ds.truths.push_back(GroundTruth{std::move(cp.eta), alpha, in_d ? 1 : 0, -1});
  }
  return ds;
}

LabeledDataset gen_rare_specialist(const SuiteSpec& spec, Split split) {
  if (spec.suite != SuiteKind::RareSpecialist)
    throw std::invalid_argument("gen_rare_specialist: wrong suite in spec");
  LabeledDataset ds = empty_dataset(spec, split);
  const int n = count_for(spec, split);
  constexpr int kGen = 0;
  constexpr int kSpec = 1;
  for (int i = 0; i < n; ++i) {
    const SampleStreams streams(spec, split, static_cast<std::size_t>(i));
    CounterStream feat = streams(kFeature);
    const double z1 = 2.0 * feat.uniform() - 1.0;
    const double z2 = 2.0 * feat.uniform() - 1.0;
    const bool in_r = streams(kRegion).bernoulli(0.15);
    const int top = z1 >= 0.0 ? 0 : 1;
    const double eta_top = in_r ? 0.60 : 0.90;

    GroundTruth gt;
    gt.eta.assign(2, 1.0 - eta_top);
    gt.eta[static_cast<std::size_t>(top)] = eta_top;
    gt.alpha = in_r ? std::vector<double>{0.60, 0.75} : std::vector<double>{0.45, 0.15};
    gt.region = in_r ? 1 : 0;

    Sample s;
    s.x = {z1, z2, in_r ? 1.0 : 0.0};
    s.y = streams(kLabel).uniform() < eta_top ? top : 1 - top;

    bool gen_ok = false;
    bool spec_ok = false;
    if (in_r) {
      // Joint table: both 0.55, generalist only 0.05, specialist only 0.20, neither 0.20.
      const double u = streams(kExpertLatent).uniform();
      gen_ok = u < 0.60;
      spec_ok = u < 0.55 || (u >= 0.60 && u < 0.80);
    } else {
      gen_ok = streams(kExpertLatent, kGen).bernoulli(0.45);
      spec_ok = streams(kExpertLatent, kSpec).bernoulli(0.15);
    }
    s.m = {gen_ok ? s.y : 1 - s.y, spec_ok ? s.y : 1 - s.y};
    ds.samples.push_back(std::move(s));
    ds.truths.push_back(std::move(gt));
  }
  return ds;
}

LabeledDataset gen_shared_acceptability(const SuiteSpec& spec, Split split) {
  if (spec.suite != SuiteKind::SharedAcceptability)
    throw std::invalid_argument("gen_shared_acceptability: wrong suite in spec");
  LabeledDataset ds = empty_dataset(spec, split);
  const int n = count_for(spec, split);
  const int K = spec.K;
  const int J = spec.J;
  const double others = static_cast<double>(J - 1);
  const double alpha_q = 0.10 + 0.78 + 0.05;
  const double alpha_rest = 0.10 + 0.78 / others + 0.03 / others;

  for (int i = 0; i < n; ++i) {
    const SampleStreams streams(spec, split, static_cast<std::size_t>(i));
    const bool in_d = streams(kRegion).bernoulli(0.60);
    ClassPart cp = draw_class_part(streams, K, in_d, 3.1);

    Sample s;
    s.y = cp.y;
    s.x = std::move(cp.x);
    CounterStream sector_noise = streams(kFeature, 1);
    s.x.resize(static_cast<std::size_t>(K + J));
    for (int j = 0; j < J; ++j) s.x[static_cast<std::size_t>(K + j)] = kNoiseStd * sector_noise.normal();

    GroundTruth gt;
    gt.eta = std::move(cp.eta);
    gt.region = in_d ? 1 : 0;
    std::vector<char> correct(static_cast<std::size_t>(J), 0);
    if (in_d) {
      const int q = static_cast<int>(streams(kSector).below(static_cast<std::uint64_t>(J)));
      gt.sector = q;
      s.x[static_cast<std::size_t>(K + q)] += 2.2;
      gt.alpha.assign(static_cast<std::size_t>(J), alpha_rest);
      gt.alpha[static_cast<std::size_t>(q)] = alpha_q;

      // Uniform over the J - 1 experts other than q.
      auto other = [&] {
        const int w = static_cast<int>(streams(kOtherExpert).below(static_cast<std::uint64_t>(J - 1)));
        return w >= q ? w + 1 : w;
      };
      const double u = streams(kExpertLatent).uniform();
      if (u < 0.10) {
        correct.assign(correct.size(), 1);
      } else if (u < 0.88) {
        correct[static_cast<std::size_t>(q)] = 1;
        correct[static_cast<std::size_t>(other())] = 1;
      } else if (u < 0.93) {
        correct[static_cast<std::size_t>(q)] = 1;
      } else if (u < 0.96) {
        correct[static_cast<std::size_t>(other())] = 1;
      }
    } else {
      gt.alpha.assign(static_cast<std::size_t>(J), 0.05);
      for (int j = 0; j < J; ++j)
        correct[static_cast<std::size_t>(j)] =
            streams(kExpertLatent, static_cast<std::uint64_t>(j)).bernoulli(0.05) ? 1 : 0;
    }
    s.m.resize(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j)
      s.m[static_cast<std::size_t>(j)] =
          correct[static_cast<std::size_t>(j)]
              ? s.y
              : wrong_label(streams(kWrongLabel, static_cast<std::uint64_t>(j)), K, s.y);
    ds.samples.push_back(std::move(s));
    ds.truths.push_back(std::move(gt));
  }
  return ds;
}

LabeledDataset gen_coupling_distractors(const SuiteSpec& spec, Split split) {
  if (spec.suite != SuiteKind::CouplingDistractors)
    throw std::invalid_argument("gen_coupling_distractors: wrong suite in spec");
  LabeledDataset ds = empty_dataset(spec, split);
  const int n = count_for(spec, split);
  for (int i = 0; i < n; ++i) {
    const SampleStreams streams(spec, split, static_cast<std::size_t>(i));
    const bool in_d = streams(kRegion).bernoulli(0.5);
    ClassPart cp = draw_class_part(streams, spec.K, in_d, 3.5);
    const double rate = in_d ? spec.expert_rate : spec.offregion_rate;

    Sample s;
    s.x = std::move(cp.x);
    s.y = cp.y;
    s.m.resize(static_cast<std::size_t>(spec.J));
    const bool first_ok = streams(kExpertLatent).bernoulli(rate);
    for (int j = 0; j < spec.J; ++j) {
      const bool correct = j == 0 && first_ok;
      s.m[static_cast<std::size_t>(j)] =
          correct ? s.y : wrong_label(streams(kWrongLabel, static_cast<std::uint64_t>(j)), spec.K, s.y);
    }
    GroundTruth gt;
    gt.eta = std::move(cp.eta);
    gt.alpha.assign(static_cast<std::size_t>(spec.J), 0.0);
    gt.alpha[0] = rate;
    gt.region = in_d ? 1 : 0;
    ds.samples.push_back(std::move(s));
    ds.truths.push_back(std::move(gt));
  }
  return ds;
}

LabeledDataset generate(const SuiteSpec& spec, Split split) {
  switch (spec.suite) {
    case SuiteKind::NestedRedundant: return gen_nested_redundant(spec, split);
    case SuiteKind::RareSpecialist: return gen_rare_specialist(spec, split);
    case SuiteKind::SharedAcceptability: return gen_shared_acceptability(spec, split);
    case SuiteKind::CouplingDistractors: return gen_coupling_distractors(spec, split);
  }
  throw std::logic_error("generate: unhandled suite");
}

SuiteData generate_all(const SuiteSpec& spec) {
  return SuiteData{generate(spec, Split::Train), generate(spec, Split::Val),
                   generate(spec, Split::Test)};
}

}  // namespace deferlab
