#include "deferlab/geomprobe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "deferlab/dataset_io.hpp"
#include "deferlab/numkit.hpp"
#include "deferlab/parallel.hpp"
#include "deferlab/synth_suites.hpp"

namespace deferlab {

std::string_view to_string(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::Curvature: return "curvature";
    case ProbeKind::Starvation: return "starvation";
    case ProbeKind::Coupling: return "coupling";
  }
  return "unknown";
}

ProbeKind parse_probe(std::string_view name) {
  for (ProbeKind k : {ProbeKind::Curvature, ProbeKind::Starvation, ProbeKind::Coupling})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown probe '" + std::string(name) +
                              "' (expected curvature, starvation or coupling)");
}

void RunningStats::add(double v) {
  ++n;
  const double delta = v - mean;
  mean += delta / static_cast<double>(n);
  m2 += delta * (v - mean);
}

void RunningStats::merge(const RunningStats& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double total = static_cast<double>(n + o.n);
  const double delta = o.mean - mean;
  mean += delta * static_cast<double>(o.n) / total;
  m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / total;
  n += o.n;
}

double RunningStats::stddev() const {
  return n < 2 ? 0.0 : std::sqrt(m2 / static_cast<double>(n));
}

double GeometryRow::positive_rate() const {
  return expert_grad.n == 0 ? 0.0
                            : static_cast<double>(positive) / static_cast<double>(expert_grad.n);
}

const GeometryRow* GeometryReport::find(SurrogateKind kind, int J) const {
  for (const GeometryRow& r : rows)
    if (r.surrogate == kind && r.J == J) return &r;
  return nullptr;
}

std::string geometry_csv(const GeometryReport& report) {
  using io::format_double;
  std::string out =
      "probe,surrogate,J,samples,nonconverged,grad_norm_mean,grad_norm_std,top_eig_mean,"
      "top_eig_std,expert_grad_mean,expert_grad_std,positive_rate,mixed_norm_mean,"
      "mixed_norm_std,bound_violations,max_bound_slack,fd_checked,fd_max_abs_err\n";
  auto stat = [&](const RunningStats& s, bool mean) {
    if (s.n == 0) return std::string();
    return format_double(mean ? s.mean : s.stddev());
  };
  for (const GeometryRow& r : report.rows) {
    out += r.probe + ',' + std::string(to_string(r.surrogate)) + ',' + std::to_string(r.J) + ',' +
           std::to_string(r.samples) + ',' + std::to_string(r.nonconverged) + ',' +
           stat(r.grad_norm, true) + ',' + stat(r.grad_norm, false) + ',' +
           stat(r.top_eig, true) + ',' + stat(r.top_eig, false) + ',' +
           stat(r.expert_grad, true) + ',' + stat(r.expert_grad, false) + ',' +
           (r.expert_grad.n ? format_double(r.positive_rate()) : std::string()) + ',' +
           stat(r.mixed_norm, true) + ',' + stat(r.mixed_norm, false) + ',' +
           std::to_string(r.bound_violations) + ',' + format_double(r.max_bound_slack) + ',' +
           std::to_string(r.fd_checked) + ',' + format_double(r.fd_max_abs_err) + '\n';
  }
  return out;
}

ProbeConfig ProbeConfig::defaults(ProbeKind kind) {
  ProbeConfig c;
  switch (kind) {
    case ProbeKind::Curvature:
      c.seeds = {0, 1, 2};
      c.J_values = {1, 4, 8, 16, 32};
      c.n_train = 3500;
      c.n_test = 6000;
      c.max_samples_per_seed = 300;
      break;
    case ProbeKind::Starvation:
      c.seeds = {0, 1, 2, 3, 4};
      c.J_values = {2};
      c.n_train = 4500;
      c.n_test = 7000;
      break;
    case ProbeKind::Coupling:
      c.seeds = {0, 1, 2};
      c.J_values = {1, 3, 5, 9, 17};
      c.n_train = 4500;
      c.n_test = 7000;
      c.max_samples_per_seed = 128;
      break;
  }
  return c;
}

namespace {

constexpr double kEigTol = 1e-10;
constexpr int kEigIters = 1000;
// Samples per run that also get a full finite-difference Hessian check.
constexpr std::size_t kFdSamplesPerRun = 4;
// Step for the cross terms of a separable loss. Their truncation error is
// identically zero, while at the default 1e-4 step the four-point formula's
// round-off alone is about ulp(loss) / (2 h^2) ~ 2e-8.
constexpr double kSeparableHessStep = 1e-3;

struct Task {
  SurrogateKind kind;
  int J;
  std::uint64_t seed;
};

std::vector<Task> make_tasks(const ProbeConfig& cfg, std::initializer_list<SurrogateKind> kinds) {
  if (cfg.seeds.empty() || cfg.J_values.empty())
    throw std::invalid_argument("probe: seeds and J values must be nonempty");
  std::vector<Task> tasks;
  for (SurrogateKind k : kinds)
    for (int J : cfg.J_values)
      for (std::uint64_t s : cfg.seeds) tasks.push_back({k, J, s});
  return tasks;
}

struct Trained {
  SuiteData data;
  LinearModel model;
  SurrogateConfig surrogate;
};

Trained train_for(const ProbeConfig& cfg, SuiteKind suite, const Task& t) {
  SuiteSpec spec = SuiteSpec::defaults(suite);
  spec.J = t.J;
  spec.seed = t.seed;
  spec.n_train = cfg.n_train;
  spec.n_val = cfg.n_val;
  spec.n_test = cfg.n_test;
  TrainConfig tc = cfg.train;
  tc.seed = t.seed;
  tc.surrogate.kind = t.kind;
  tc.surrogate.beta = cfg.lambda / t.J;
  Trained out{generate_all(spec), {}, tc.surrogate};
  out.model = train(out.data.train, out.data.val, tc).model;
  return out;
}

void note_bound(GeometryRow& row, double value, double bound) {
  const double slack = value - bound;
  row.max_bound_slack = std::max(row.max_bound_slack, slack);
  if (slack > 0.0) ++row.bound_violations;
}

double max_abs_diff(const numkit::DenseMatrix& a, const numkit::DenseMatrix& b) {
  double m = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) m = std::max(m, std::abs(a(r, c) - b(r, c)));
  return m;
}

numkit::DenseMatrix fd_loss_hessian(const SurrogateConfig& sc, int K, std::span<const double> z,
                                    const Sample& s, double h = numkit::kHessStep) {
  return numkit::fd_hessian(
      [&](std::span<const double> a) { return loss_value(sc, K, a, s); }, z, h);
}

// Full (K+J) Hessian of the decoupled surrogate from its blocks.
numkit::DenseMatrix assemble(const DecoupledHessian& h) {
  const std::size_t K = h.class_block.rows();
  const std::size_t J = h.expert_diag.size();
  numkit::DenseMatrix full(K + J, K + J);
  for (std::size_t r = 0; r < K; ++r)
    for (std::size_t c = 0; c < K; ++c) full(r, c) = h.class_block(r, c);
  for (std::size_t j = 0; j < J; ++j) full(K + j, K + j) = h.expert_diag[j];
  return full;
}

GeometryReport merge_rows(const std::vector<Task>& tasks, std::vector<GeometryRow>& parts) {
  GeometryReport report;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    GeometryRow* row = nullptr;
    for (GeometryRow& r : report.rows)
      if (r.surrogate == tasks[i].kind && r.J == tasks[i].J) row = &r;
    const GeometryRow& p = parts[i];
    if (!row) {
      report.rows.push_back(p);
      continue;
    }
    row->samples += p.samples;
    row->nonconverged += p.nonconverged;
    row->grad_norm.merge(p.grad_norm);
    row->top_eig.merge(p.top_eig);
    row->expert_grad.merge(p.expert_grad);
    row->positive += p.positive;
    row->mixed_norm.merge(p.mixed_norm);
    row->bound_violations += p.bound_violations;
    row->max_bound_slack = std::max(row->max_bound_slack, p.max_bound_slack);
    row->fd_max_abs_err = std::max(row->fd_max_abs_err, p.fd_max_abs_err);
    row->fd_checked += p.fd_checked;
  }
  return report;
}

bool capped(const ProbeConfig& cfg, std::size_t taken) {
  return cfg.max_samples_per_seed != 0 && taken >= cfg.max_samples_per_seed;
}

}  // namespace

GeometryReport curvature_sweep(const ProbeConfig& cfg) {
  const auto tasks = make_tasks(cfg, {SurrogateKind::AddCE, SurrogateKind::Decoupled});
  std::vector<GeometryRow> parts(tasks.size());
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const Task& t = tasks[i];
    const Trained tr = train_for(cfg, SuiteKind::NestedRedundant, t);
    GeometryRow& row = parts[i];
    row.probe = "curvature";
    row.surrogate = t.kind;
    row.J = t.J;
    const int K = tr.model.K;
    const double beta = tr.surrogate.beta;
    for (const Sample& s : tr.data.test.samples) {
      if (capped(cfg, row.samples)) break;
      const CorrectSet cs = correct_set(s);
      if (cs.empty()) continue;
      const std::vector<double> z = tr.model.logits(s.x);
      const LossGrad lg = loss_grad(tr.surrogate, K, z, s);
      numkit::DenseMatrix full;
      numkit::EigenEstimate eig;
      double bound = 0.0;
      if (t.kind == SurrogateKind::AddCE) {
        full = ce_hessian(to_aug(K, z), s);
        eig = numkit::top_eig_sym(full, kEigIters, kEigTol);
        bound = (1.0 + static_cast<double>(cs.size())) / 2.0 + 1e-9;
      } else {
        const DecoupledHessian dh = due_hessian(to_dec(K, z), s, tr.surrogate);
        eig = numkit::top_eig_sym(dh.class_block, kEigIters, kEigTol);
        // The class block carries the 1/2 bound; expert entries carry beta / 4.
        bound = 0.5 + 1e-9;
        for (double v : dh.expert_diag)
          if (v > beta / 4.0 + 1e-12) ++row.bound_violations;
        full = assemble(dh);
      }
      ++row.samples;
      if (!eig.converged) {
        ++row.nonconverged;
        continue;
      }
      note_bound(row, eig.value, bound);
      double top = eig.value;
      if (t.kind == SurrogateKind::Decoupled)
        for (std::size_t j = 0; j < static_cast<std::size_t>(t.J); ++j)
          top = std::max(top, full(static_cast<std::size_t>(K) + j, static_cast<std::size_t>(K) + j));
      row.grad_norm.add(numkit::norm2(lg.grad));
      row.top_eig.add(top);
      if (row.fd_checked < kFdSamplesPerRun) {
        row.fd_max_abs_err =
            std::max(row.fd_max_abs_err, max_abs_diff(full, fd_loss_hessian(tr.surrogate, K, z, s)));
        ++row.fd_checked;
      }
    }
  });
  return merge_rows(tasks, parts);
}

GeometryReport starvation_probe(const ProbeConfig& cfg) {
  const auto tasks = make_tasks(cfg, {SurrogateKind::PiCCE, SurrogateKind::Decoupled});
  std::vector<GeometryRow> parts(tasks.size());
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const Task& t = tasks[i];
    const Trained tr = train_for(cfg, SuiteKind::RareSpecialist, t);
    GeometryRow& row = parts[i];
    row.probe = "starvation";
    row.surrogate = t.kind;
    row.J = t.J;
    const int K = tr.model.K;
    for (const Sample& s : tr.data.test.samples) {
      if (capped(cfg, row.samples)) break;
      const CorrectSet cs = correct_set(s);
      if (cs.size() < 2) continue;
      const std::vector<double> z = tr.model.logits(s.x);
      const LossGrad lg = loss_grad(tr.surrogate, K, z, s);
      ++row.samples;
      row.grad_norm.add(numkit::norm2(lg.grad));
      for (int j : cs.indices) {
        if (t.kind == SurrogateKind::PiCCE && lg.inter.jstar == j) continue;
        const double g = lg.grad[static_cast<std::size_t>(K + j)];
        row.expert_grad.add(g);
        if (g > 0.0) ++row.positive;
      }
    }
  });
  return merge_rows(tasks, parts);
}

GeometryReport coupling_probe(const ProbeConfig& cfg) {
  const auto tasks = make_tasks(cfg, {SurrogateKind::ASM, SurrogateKind::Decoupled});
  std::vector<GeometryRow> parts(tasks.size());
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const Task& t = tasks[i];
    const Trained tr = train_for(cfg, SuiteKind::CouplingDistractors, t);
    GeometryRow& row = parts[i];
    row.probe = "coupling";
    row.surrogate = t.kind;
    row.J = t.J;
    const int K = tr.model.K;
    const auto k = static_cast<std::size_t>(K);
    const auto J = static_cast<std::size_t>(t.J);
    const double bound = std::sqrt(static_cast<double>(t.J)) / 4.0 + 1e-12;
    for (const Sample& s : tr.data.test.samples) {
      if (capped(cfg, row.samples)) break;
      const std::vector<double> z = tr.model.logits(s.x);
      ++row.samples;
      if (t.kind == SurrogateKind::ASM) {
        const numkit::DenseMatrix block = asm_mixed_block(to_aug(K, z), s);
        const double norm = numkit::op_norm_rect(block);
        row.mixed_norm.add(norm);
        note_bound(row, norm, bound);
        // The finite-difference check needs k* stable under the +-h probes.
        std::vector<double> cls(z.begin(), z.begin() + K);
        std::sort(cls.begin(), cls.end(), std::greater<>());
        if (cls[0] - cls[1] > 1e-3) {
          const numkit::DenseMatrix fd = fd_loss_hessian(tr.surrogate, K, z, s).block(0, k, k, J);
          row.fd_max_abs_err = std::max(row.fd_max_abs_err, max_abs_diff(block, fd));
          ++row.fd_checked;
        }
      } else {
        const DecoupledHessian dh = due_hessian(to_dec(K, z), s, tr.surrogate);
        row.mixed_norm.add(numkit::op_norm_rect(dh.mixed_block));
        const numkit::DenseMatrix fd =
            fd_loss_hessian(tr.surrogate, K, z, s, kSeparableHessStep).block(0, k, k, J);
        row.fd_max_abs_err = std::max(row.fd_max_abs_err, fd.max_abs());
        ++row.fd_checked;
      }
    }
  });
  return merge_rows(tasks, parts);
}

GeometryReport run_probe(ProbeKind kind, const ProbeConfig& cfg) {
  switch (kind) {
    case ProbeKind::Curvature: return curvature_sweep(cfg);
    case ProbeKind::Starvation: return starvation_probe(cfg);
    case ProbeKind::Coupling: return coupling_probe(cfg);
  }
  throw std::logic_error("run_probe: unhandled probe");
}

}  // namespace deferlab
