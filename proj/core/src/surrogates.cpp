#include "deferlab/surrogates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace deferlab {

using numkit::log_sum_exp;
using numkit::sigmoid;
using numkit::softmax;
using numkit::softplus;

CorrectSet correct_set(const Sample& s) {
  CorrectSet c;
  c.targets.assign(s.m.size(), 0.0);
  for (std::size_t j = 0; j < s.m.size(); ++j) {
    if (s.m[j] == s.y) {
      c.indices.push_back(static_cast<int>(j));
      c.targets[j] = 1.0;
    }
  }
  return c;
}

std::string_view to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::AddCE: return "add_ce";
    case SurrogateKind::PiCCE: return "picce";
    case SurrogateKind::Mao25: return "mao25";
    case SurrogateKind::ASM: return "asm";
    case SurrogateKind::OvA: return "ova";
    case SurrogateKind::Decoupled: return "decoupled";
  }
  return "unknown";
}

SurrogateKind parse_surrogate(std::string_view name) {
  for (SurrogateKind k : kAllSurrogates)
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown surrogate '" + std::string(name) +
                              "' (expected add_ce, picce, mao25, asm, ova, decoupled)");
}

bool uses_augmented_scores(SurrogateKind kind) {
  return kind != SurrogateKind::OvA && kind != SurrogateKind::Decoupled;
}

void SurrogateConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("SurrogateConfig: beta must be a positive finite number");
}

namespace {

void check_sample(const Sample& s, int K, std::size_t J) {
  if (K < 1) throw std::invalid_argument("surrogate: K must be >= 1");
  if (s.y < 0 || s.y >= K)
    throw std::invalid_argument("surrogate: label " + std::to_string(s.y) + " outside [0, K)");
  if (s.m.size() != J)
    throw std::invalid_argument("surrogate: sample has " + std::to_string(s.m.size()) +
                                " expert predictions, scores have " + std::to_string(J));
  for (int mj : s.m)
    if (mj < 0 || mj >= K) throw std::invalid_argument("surrogate: expert prediction outside [0, K)");
}

void check_aug(const AugScores& a, const Sample& s) {
  if (a.K < 1 || a.J() < 0) throw std::invalid_argument("AugScores: inconsistent K");
  check_sample(s, a.K, static_cast<std::size_t>(a.J()));
}

template <typename T>
int argmax_lowest(std::span<const T> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

// Softmax loss with `weight` copies of the partition function and unit rewards
// on `rewarded`: weight * LSE(a) - sum_{c in rewarded} a_c.
LossGrad weighted_softmax_ce(const AugScores& a, std::span<const int> rewarded, double weight) {
  LossGrad out;
  out.inter.q = softmax(a.a);
  const double lse = log_sum_exp(a.a);
  out.loss = weight * lse;
  out.grad.resize(a.a.size());
  for (std::size_t i = 0; i < a.a.size(); ++i) out.grad[i] = weight * out.inter.q[i];
  for (int c : rewarded) {
    out.loss -= a.a[static_cast<std::size_t>(c)];
    out.grad[static_cast<std::size_t>(c)] -= 1.0;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

LossGrad ce_loss_grad(const AugScores& a, const Sample& s) {
  check_aug(a, s);
  const CorrectSet cs = correct_set(s);
  std::vector<int> rewarded{s.y};
  for (int j : cs.indices) rewarded.push_back(a.K + j);
  // -log q_y - sum_{j in C} log q_{K+j} = (1 + |C|) LSE - a_y - sum a_{K+j}
  return weighted_softmax_ce(a, rewarded, 1.0 + static_cast<double>(cs.size()));
}

DenseMatrix ce_hessian(const AugScores& a, const Sample& s) {
  check_aug(a, s);
  const double factor = 1.0 + static_cast<double>(correct_set(s).size());
  DenseMatrix h = numkit::softmax_covariance(softmax(a.a));
  h *= factor;
  return h;
}

// ---------------------------------------------------------------------------

LossGrad picce_loss_grad(const AugScores& a, const Sample& s, std::optional<int> fixed_winner) {
  check_aug(a, s);
  const CorrectSet cs = correct_set(s);
  std::optional<int> winner;
  if (!cs.empty()) {
    if (fixed_winner) {
      if (std::find(cs.indices.begin(), cs.indices.end(), *fixed_winner) == cs.indices.end())
        throw std::invalid_argument("picce: fixed winner is not a correct expert");
      winner = fixed_winner;
    } else {
      winner = cs.indices.front();
      for (int j : cs.indices)
        if (a.a[static_cast<std::size_t>(a.K + j)] > a.a[static_cast<std::size_t>(a.K + *winner)])
          winner = j;
    }
  }
  std::vector<int> rewarded{s.y};
  if (winner) rewarded.push_back(a.K + *winner);
  LossGrad out = weighted_softmax_ce(a, rewarded, winner ? 2.0 : 1.0);
  out.inter.jstar = winner;
  return out;
}

DenseMatrix picce_hessian(const AugScores& a, const Sample& s) {
  check_aug(a, s);
  const double factor = correct_set(s).empty() ? 1.0 : 2.0;
  DenseMatrix h = numkit::softmax_covariance(softmax(a.a));
  h *= factor;
  return h;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<int> acceptable_set(const Sample& s, int K) {
  std::vector<int> acc{s.y};
  for (std::size_t j = 0; j < s.m.size(); ++j)
    if (s.m[j] == s.y) acc.push_back(K + static_cast<int>(j));
  return acc;
}

std::vector<char> membership(std::size_t n, std::span<const int> members) {
  std::vector<char> in(n, 0);
  for (int c : members) {
    if (c < 0 || static_cast<std::size_t>(c) >= n)
      throw std::invalid_argument("acceptable index out of range");
    in[static_cast<std::size_t>(c)] = 1;
  }
  return in;
}

}  // namespace

std::vector<double> mao_grad_from_probs(std::span<const double> q,
                                        std::span<const int> acceptable) {
  const std::vector<char> in = membership(q.size(), acceptable);
  double mass = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (in[i]) mass += q[i];
  std::vector<double> g(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) g[i] = q[i] * (mass - (in[i] ? 1.0 : 0.0));
  return g;
}

LossGrad mao_loss_grad(const AugScores& a, const Sample& s) {
  check_aug(a, s);
  LossGrad out;
  out.inter.q = softmax(a.a);
  out.inter.acc_set = acceptable_set(s, a.K);
  double mass = 0.0;
  for (int c : out.inter.acc_set) mass += out.inter.q[static_cast<std::size_t>(c)];
  out.inter.acc_mass = mass;
  out.loss = 1.0 - mass;
  out.grad = mao_grad_from_probs(out.inter.q, out.inter.acc_set);
  return out;
}

DenseMatrix mao_hessian(const AugScores& a, const Sample& s) {
  check_aug(a, s);
  const std::vector<double> q = softmax(a.a);
  const std::vector<int> acc = acceptable_set(s, a.K);
  const std::vector<char> in = membership(q.size(), acc);
  double mass = 0.0;
  for (int c : acc) mass += q[static_cast<std::size_t>(c)];
  const std::size_t n = q.size();
  DenseMatrix h(n, n);
  // q_i (1{i=r} - q_r)(S - 1{i in S}) + q_i q_r (1{r in S} - S)
  for (std::size_t i = 0; i < n; ++i) {
    const double in_i = in[i] ? 1.0 : 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double in_r = in[r] ? 1.0 : 0.0;
      const double kron = (i == r) ? 1.0 : 0.0;
      h(i, r) = q[i] * (kron - q[r]) * (mass - in_i) + q[i] * q[r] * (in_r - mass);
    }
  }
  return h;
}

// ---------------------------------------------------------------------------

namespace {

struct AsmParts {
  int kstar = 0;
  double log_b = 0.0;
  std::vector<double> xi;
  std::vector<double> pi;
  std::vector<double> v;  // effective expert scores a_{K+j} - log B
  std::vector<double> psi;
};

AsmParts asm_parts(const AugScores& a) {
  if (a.K < 2) throw std::invalid_argument("asm: requires K >= 2 (no non-max class otherwise)");
  const auto cls = std::span<const double>(a.a).first(static_cast<std::size_t>(a.K));
  AsmParts p;
  p.kstar = argmax_lowest(cls);
  std::vector<double> rest;
  rest.reserve(cls.size() - 1);
  for (int k = 0; k < a.K; ++k)
    if (k != p.kstar) rest.push_back(cls[static_cast<std::size_t>(k)]);
  p.log_b = log_sum_exp(rest);
  p.xi = softmax(cls);
  p.pi.assign(cls.size(), 0.0);
  for (int k = 0; k < a.K; ++k)
    if (k != p.kstar) p.pi[static_cast<std::size_t>(k)] = std::exp(cls[static_cast<std::size_t>(k)] - p.log_b);
  const int J = a.J();
  p.v.resize(static_cast<std::size_t>(J));
  p.psi.resize(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    p.v[static_cast<std::size_t>(j)] = a.a[static_cast<std::size_t>(a.K + j)] - p.log_b;
    p.psi[static_cast<std::size_t>(j)] = sigmoid(p.v[static_cast<std::size_t>(j)]);
  }
  return p;
}

}  // namespace

LossGrad asm_loss_grad(const AugScores& a, const Sample& s) {
  check_aug(a, s);
  const AsmParts parts = asm_parts(a);
  const CorrectSet cs = correct_set(s);
  const std::size_t K = static_cast<std::size_t>(a.K);
  const std::size_t J = static_cast<std::size_t>(a.J());

  LossGrad out;
  const auto cls = std::span<const double>(a.a).first(K);
  out.loss = log_sum_exp(cls) - cls[static_cast<std::size_t>(s.y)];
  double residual = 0.0;
  out.grad.assign(K + J, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    const double t = cs.targets[j];
    const double v = parts.v[j];
    out.loss += t * softplus(-v) + (1.0 - t) * softplus(v);
    const double r = parts.psi[j] - t;
    residual += r;
    out.grad[K + j] = r;
  }
  for (std::size_t k = 0; k < K; ++k) {
    out.grad[k] = parts.xi[k] - (static_cast<int>(k) == s.y ? 1.0 : 0.0);
    if (static_cast<int>(k) != parts.kstar) out.grad[k] -= parts.pi[k] * residual;
  }
  out.inter.xi = parts.xi;
  out.inter.psi = parts.psi;
  out.inter.pi = parts.pi;
  out.inter.kstar = parts.kstar;
  return out;
}

DenseMatrix asm_mixed_block(const AugScores& a, const Sample& s) {
  check_aug(a, s);
  const AsmParts parts = asm_parts(a);
  const std::size_t K = static_cast<std::size_t>(a.K);
  const std::size_t J = static_cast<std::size_t>(a.J());
  DenseMatrix h(K, J);
  for (std::size_t r = 0; r < K; ++r) {
    if (static_cast<int>(r) == parts.kstar) continue;
    for (std::size_t j = 0; j < J; ++j)
      h(r, j) = -parts.pi[r] * parts.psi[j] * (1.0 - parts.psi[j]);
  }
  return h;
}

// ---------------------------------------------------------------------------

LossGrad ova_loss_grad(std::span<const double> g, std::span<const double> s,
                       const Sample& sample) {
  check_sample(sample, static_cast<int>(g.size()), s.size());
  const CorrectSet cs = correct_set(sample);
  LossGrad out;
  out.grad.resize(g.size() + s.size());
  out.inter.g_sigmoid.resize(g.size());
  out.inter.u.resize(s.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double b = static_cast<int>(k) == sample.y ? 1.0 : 0.0;
    // log(1 + exp(-gamma g)) with gamma = 2b - 1
    out.loss += softplus(-(2.0 * b - 1.0) * g[k]);
    out.inter.g_sigmoid[k] = sigmoid(g[k]);
    out.grad[k] = out.inter.g_sigmoid[k] - b;
  }
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double t = cs.targets[j];
    out.loss += softplus(-(2.0 * t - 1.0) * s[j]);
    out.inter.u[j] = sigmoid(s[j]);
    out.grad[g.size() + j] = out.inter.u[j] - t;
  }
  return out;
}

// ---------------------------------------------------------------------------

LossGrad due_cost_sensitive_loss_grad(const DecScores& ds, std::span<const double> tau,
                                      const Sample& sample, const SurrogateConfig& cfg) {
  cfg.validate();
  check_sample(sample, static_cast<int>(ds.w.size()), ds.s.size());
  if (tau.size() != ds.s.size())
    throw std::invalid_argument("decoupled: target vector length must equal J");
  for (double t : tau)
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("decoupled: targets must lie in [0, 1]");

  const std::size_t K = ds.w.size();
  const std::size_t J = ds.s.size();
  LossGrad out;
  out.inter.p = softmax(ds.w);
  out.loss = log_sum_exp(ds.w) - ds.w[static_cast<std::size_t>(sample.y)];
  out.grad.resize(K + J);
  for (std::size_t k = 0; k < K; ++k)
    out.grad[k] = out.inter.p[k] - (static_cast<int>(k) == sample.y ? 1.0 : 0.0);
  out.inter.u.resize(J);
  for (std::size_t j = 0; j < J; ++j) {
    const double sj = ds.s[j];
    out.inter.u[j] = sigmoid(sj);
    out.loss += cfg.beta * (tau[j] * softplus(-sj) + (1.0 - tau[j]) * softplus(sj));
    out.grad[K + j] = cfg.beta * (out.inter.u[j] - tau[j]);
  }
  return out;
}

LossGrad due_loss_grad(const DecScores& ds, const Sample& sample, const SurrogateConfig& cfg) {
  check_sample(sample, static_cast<int>(ds.w.size()), ds.s.size());
  return due_cost_sensitive_loss_grad(ds, correct_set(sample).targets, sample, cfg);
}

double DecoupledHessian::top_eigenvalue() const {
  double top = numkit::top_eig_sym(class_block).value;
  for (double d : expert_diag) top = std::max(top, d);
  return top;
}

DecoupledHessian due_hessian(const DecScores& ds, const Sample& sample,
                             const SurrogateConfig& cfg) {
  cfg.validate();
  check_sample(sample, static_cast<int>(ds.w.size()), ds.s.size());
  DecoupledHessian h;
  h.class_block = numkit::softmax_covariance(softmax(ds.w));
  h.expert_diag.resize(ds.s.size());
  for (std::size_t j = 0; j < ds.s.size(); ++j) {
    const double u = sigmoid(ds.s[j]);
    h.expert_diag[j] = cfg.beta * u * (1.0 - u);
  }
  h.mixed_block = DenseMatrix(ds.w.size(), ds.s.size());
  return h;
}

// ---------------------------------------------------------------------------

AugScores to_aug(int K, std::span<const double> scores) {
  if (K < 1 || static_cast<std::size_t>(K) > scores.size())
    throw std::invalid_argument("to_aug: K out of range");
  return AugScores{K, std::vector<double>(scores.begin(), scores.end())};
}

DecScores to_dec(int K, std::span<const double> scores) {
  if (K < 1 || static_cast<std::size_t>(K) > scores.size())
    throw std::invalid_argument("to_dec: K out of range");
  const auto k = static_cast<std::size_t>(K);
  return DecScores{std::vector<double>(scores.begin(), scores.begin() + static_cast<long>(k)),
                   std::vector<double>(scores.begin() + static_cast<long>(k), scores.end())};
}

LossGrad loss_grad(const SurrogateConfig& cfg, int K, std::span<const double> scores,
                   const Sample& sample) {
  switch (cfg.kind) {
    case SurrogateKind::AddCE: return ce_loss_grad(to_aug(K, scores), sample);
    case SurrogateKind::PiCCE: return picce_loss_grad(to_aug(K, scores), sample);
    case SurrogateKind::Mao25: return mao_loss_grad(to_aug(K, scores), sample);
    case SurrogateKind::ASM: return asm_loss_grad(to_aug(K, scores), sample);
    case SurrogateKind::OvA: {
      const auto k = static_cast<std::size_t>(K);
      return ova_loss_grad(scores.first(k), scores.subspan(k), sample);
    }
    case SurrogateKind::Decoupled: return due_loss_grad(to_dec(K, scores), sample, cfg);
  }
  throw std::logic_error("loss_grad: unhandled surrogate kind");
}

double loss_value(const SurrogateConfig& cfg, int K, std::span<const double> scores,
                  const Sample& sample) {
  return loss_grad(cfg, K, scores, sample).loss;
}

}  // namespace deferlab
