#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deferlab/bayes_oracle.hpp"
#include "deferlab/surrogates.hpp"

namespace deferlab {

enum class SuiteKind { NestedRedundant, RareSpecialist, SharedAcceptability, CouplingDistractors };

std::string_view to_string(SuiteKind kind);
SuiteKind parse_suite(std::string_view name);

enum class Split { Train = 0, Val = 1, Test = 2 };
std::string_view to_string(Split split);

struct SuiteSpec {
  SuiteKind suite = SuiteKind::NestedRedundant;
  int K = 16;
  int J = 24;
  int n_train = 900;
  int n_val = 2000;
  int n_test = 8000;
  std::uint64_t seed = 0;
  // Coupling suite only: correctness rate of expert 0 on / off the defer region.
  double expert_rate = 0.9;
  double offregion_rate = 0.1;

  // Default sizes for each suite.
  static SuiteSpec defaults(SuiteKind kind);
  int feature_dim() const;
  void validate() const;
};

// Samples with their analytic ground truth, index-aligned.
struct LabeledDataset {
  SuiteSpec spec;
  Split split = Split::Train;
  std::vector<Sample> samples;
  std::vector<GroundTruth> truths;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

struct SuiteData {
  LabeledDataset train;
  LabeledDataset val;
  LabeledDataset test;
};

// Nested redundant experts: one shared latent U per sample, expert j correct
// iff U <= alpha_j, so correct sets form a chain.
LabeledDataset gen_nested_redundant(const SuiteSpec& spec, Split split);
// Rare region where a specialist beats a generalist whose correct events mostly overlap.
LabeledDataset gen_rare_specialist(const SuiteSpec& spec, Split split);
// Sector-best expert with heavy shared acceptability.
LabeledDataset gen_shared_acceptability(const SuiteSpec& spec, Split split);
// One informative expert plus J - 1 always-incorrect distractors.
LabeledDataset gen_coupling_distractors(const SuiteSpec& spec, Split split);

LabeledDataset generate(const SuiteSpec& spec, Split split);
SuiteData generate_all(const SuiteSpec& spec);

// Closed-form utilities on the defer region of the nested suite:
// 0.99 - 0.24 * log(1 + j) / log(J), and 0.04 - 0.038 * (same spacing) off it.
std::vector<double> nested_alpha(int J, bool defer_region);

}  // namespace deferlab
