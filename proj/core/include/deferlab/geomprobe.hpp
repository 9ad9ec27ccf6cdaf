#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "deferlab/surrogates.hpp"
#include "deferlab/trainer.hpp"

namespace deferlab {

enum class ProbeKind { Curvature, Starvation, Coupling };

std::string_view to_string(ProbeKind kind);
ProbeKind parse_probe(std::string_view name);

struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v);
  void merge(const RunningStats& other);
  double stddev() const;  // population std; 0 when n < 2
};

// One aggregate row per (surrogate, J). Unused statistics stay empty.
struct GeometryRow {
  std::string probe;
  SurrogateKind surrogate = SurrogateKind::Decoupled;
  int J = 0;
  std::size_t samples = 0;         // qualifying samples measured
  std::size_t nonconverged = 0;    // eigen estimates excluded from aggregates
  RunningStats grad_norm;          // ||grad_a Phi||_2
  RunningStats top_eig;            // lambda_max of the per-sample Hessian
  RunningStats expert_grad;        // starvation: gradient on the probed expert logits
  std::size_t positive = 0;        // starvation: probed gradients > 0
  RunningStats mixed_norm;         // coupling: ||H_mix||_op
  std::size_t bound_violations = 0;
  // Max over samples of measured - bound; negative when every sample respects it.
  double max_bound_slack = -std::numeric_limits<double>::infinity();
  double fd_max_abs_err = 0.0;     // analytic vs finite-difference, where checked
  std::size_t fd_checked = 0;

  double positive_rate() const;
};

struct GeometryReport {
  std::vector<GeometryRow> rows;

  const GeometryRow* find(SurrogateKind kind, int J) const;
};

std::string geometry_csv(const GeometryReport& report);

struct ProbeConfig {
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<int> J_values;
  int n_train = 0;
  int n_val = 2000;
  int n_test = 0;
  // Cap on measured samples per (seed, J, surrogate); 0 means no cap.
  std::size_t max_samples_per_seed = 0;
  // Decoupled weight per expert is lambda / J.
  double lambda = 1.0;
  TrainConfig train;
  int jobs = 1;

  static ProbeConfig defaults(ProbeKind kind);
};

// Add. CE vs Decoupled on the nested suite, one row per J; samples with at least
// one correct expert.
GeometryReport curvature_sweep(const ProbeConfig& cfg);
// PiCCE vs Decoupled on the rare-specialist suite, samples with both experts correct.
GeometryReport starvation_probe(const ProbeConfig& cfg);
// A-SM vs Decoupled mixed class-expert block on the distractor suite.
GeometryReport coupling_probe(const ProbeConfig& cfg);

GeometryReport run_probe(ProbeKind kind, const ProbeConfig& cfg);

}  // namespace deferlab
