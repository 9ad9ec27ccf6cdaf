#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deferlab/numkit.hpp"

namespace deferlab {

using numkit::DenseMatrix;

// One realization (x, y, m). Labels and expert predictions are 0-based.
struct Sample {
  std::vector<double> x;
  int y = 0;
  std::vector<int> m;
};

// Experts whose prediction equals the realized label.
struct CorrectSet {
  std::vector<int> indices;
  std::vector<double> targets;  // t_j = 1{m_j == y}, one per expert

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

CorrectSet correct_set(const Sample& s);

// Shared score vector over K class actions followed by J defer actions.
struct AugScores {
  int K = 0;
  std::vector<double> a;

  int J() const { return static_cast<int>(a.size()) - K; }
};

// Separate class logits w (K) and expert logits s (J).
struct DecScores {
  std::vector<double> w;
  std::vector<double> s;
};

enum class SurrogateKind { AddCE, PiCCE, Mao25, ASM, OvA, Decoupled };
enum class TieBreak { LowestIndex };

inline constexpr SurrogateKind kAllSurrogates[] = {
    SurrogateKind::AddCE, SurrogateKind::PiCCE, SurrogateKind::Mao25,
    SurrogateKind::ASM,   SurrogateKind::OvA,   SurrogateKind::Decoupled};

std::string_view to_string(SurrogateKind kind);
SurrogateKind parse_surrogate(std::string_view name);

// True for the four surrogates scoring one shared (K+J) vector.
bool uses_augmented_scores(SurrogateKind kind);

struct SurrogateConfig {
  SurrogateKind kind = SurrogateKind::Decoupled;
  // Per-expert weight of the decoupled BCE terms; the total weight is beta * J.
  double beta = 0.5;
  TieBreak tie_break = TieBreak::LowestIndex;

  double lambda(int J) const { return beta * J; }
  void validate() const;
};

struct SurrogateIntermediates {
  std::vector<double> q;    // softmax over K+J (AddCE, PiCCE, Mao25)
  std::vector<double> xi;   // A-SM class softmax over K
  std::vector<double> psi;  // A-SM expert probabilities
  std::vector<double> pi;   // A-SM leakage weights over classes, 0 at kstar
  int kstar = -1;
  std::optional<int> jstar;   // PiCCE winner (expert index)
  std::vector<int> acc_set;   // Mao25 acceptable coordinates in [0, K+J)
  double acc_mass = 0.0;
  std::vector<double> p;  // decoupled class softmax
  std::vector<double> u;  // decoupled / OvA expert sigmoids
  std::vector<double> g_sigmoid;  // OvA class sigmoids (not a simplex)
};

// Gradients are laid out as K class coordinates followed by J expert
// coordinates for every surrogate.
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
  SurrogateIntermediates inter;
};

// ---------------------------------------------------------------------------
// Additive cross-entropy over the augmented softmax.
LossGrad ce_loss_grad(const AugScores& a, const Sample& s);
DenseMatrix ce_hessian(const AugScores& a, const Sample& s);

// ---------------------------------------------------------------------------
// PiCCE: rewards the true class and one winning correct expert. When
// `fixed_winner` is set it overrides the argmax (used to differentiate with
// the winner held constant).
LossGrad picce_loss_grad(const AugScores& a, const Sample& s,
                         std::optional<int> fixed_winner = std::nullopt);
DenseMatrix picce_hessian(const AugScores& a, const Sample& s);

// ---------------------------------------------------------------------------
// Mao25 with Psi(u) = 1 - u: loss is one minus the acceptable-set mass.
LossGrad mao_loss_grad(const AugScores& a, const Sample& s);
DenseMatrix mao_hessian(const AugScores& a, const Sample& s);
// Gradient q_i (S - 1{i in S}) expressed directly in probabilities; accepts
// boundary allocations (q_i = 0) that no finite score vector reaches.
std::vector<double> mao_grad_from_probs(std::span<const double> q,
                                        std::span<const int> acceptable);

// ---------------------------------------------------------------------------
// Multi-expert asymmetric softmax. k* is the lowest-index class argmax and is
// held fixed for the evaluation. Throws for K < 2.
LossGrad asm_loss_grad(const AugScores& a, const Sample& s);
// K x J block d^2 Phi / (d a_class d a_expert) = -pi d^T with d_j = psi_j (1 - psi_j).
// Row kstar is zero.
DenseMatrix asm_mixed_block(const AugScores& a, const Sample& s);

// ---------------------------------------------------------------------------
// One-vs-all: K + J independent logistic terms.
LossGrad ova_loss_grad(std::span<const double> g, std::span<const double> s,
                       const Sample& sample);

// ---------------------------------------------------------------------------
// Decoupled surrogate: softmax CE on w plus beta-weighted BCE per expert on s.
LossGrad due_loss_grad(const DecScores& ds, const Sample& sample, const SurrogateConfig& cfg);
// Same with soft per-expert targets tau_j in [0, 1] in place of 1{m_j == y}.
LossGrad due_cost_sensitive_loss_grad(const DecScores& ds, std::span<const double> tau,
                                      const Sample& sample, const SurrogateConfig& cfg);

struct DecoupledHessian {
  DenseMatrix class_block;          // Diag(p) - p p^T
  std::vector<double> expert_diag;  // beta * u_j (1 - u_j)
  DenseMatrix mixed_block;          // K x J, zero
  double top_eigenvalue() const;
};
DecoupledHessian due_hessian(const DecScores& ds, const Sample& sample,
                             const SurrogateConfig& cfg);

// ---------------------------------------------------------------------------
// Dispatch over a flat (K+J) score vector: [class | expert] coordinates.
LossGrad loss_grad(const SurrogateConfig& cfg, int K, std::span<const double> scores,
                   const Sample& sample);
double loss_value(const SurrogateConfig& cfg, int K, std::span<const double> scores,
                  const Sample& sample);

AugScores to_aug(int K, std::span<const double> scores);
DecScores to_dec(int K, std::span<const double> scores);

}  // namespace deferlab
