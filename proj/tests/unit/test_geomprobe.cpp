#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "deferlab/dataset_io.hpp"
#include "deferlab/geomprobe.hpp"

using namespace deferlab;

namespace {

ProbeConfig tiny(ProbeKind kind) {
  ProbeConfig c = ProbeConfig::defaults(kind);
  c.seeds = {0};
  c.n_train = 600;
  c.n_val = 300;
  c.n_test = 600;
  c.train.epochs = 15;
  if (kind == ProbeKind::Curvature) c.J_values = {1, 4};
  if (kind == ProbeKind::Coupling) c.J_values = {1, 3};
  c.max_samples_per_seed = 60;
  return c;
}

}  // namespace

TEST(RunningStats, MergeMatchesSinglePass) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(1.0, 3.0);
  RunningStats all, a, b;
  std::vector<double> xs;
  for (int i = 0; i < 500; ++i) {
    const double v = g(rng);
    xs.push_back(v);
    all.add(v);
    (i < 180 ? a : b).add(v);
  }
  a.merge(b);
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double v : xs) var += (v - mean) * (v - mean);
  var /= static_cast<double>(xs.size());
  EXPECT_EQ(a.n, 500u);
  EXPECT_NEAR(a.mean, mean, 1e-12);
  EXPECT_NEAR(a.stddev(), std::sqrt(var), 1e-12);
  EXPECT_NEAR(all.stddev(), std::sqrt(var), 1e-12);
  RunningStats one;
  one.add(4.0);
  EXPECT_EQ(one.stddev(), 0.0);
}

TEST(Probe, Names) {
  for (ProbeKind k : {ProbeKind::Curvature, ProbeKind::Starvation, ProbeKind::Coupling})
    EXPECT_EQ(parse_probe(to_string(k)), k);
  EXPECT_THROW(parse_probe("hessian"), std::invalid_argument);
}

TEST(Probe, CurvatureRespectsBounds) {
  const GeometryReport rep = curvature_sweep(tiny(ProbeKind::Curvature));
  ASSERT_EQ(rep.rows.size(), 4u);
  for (const GeometryRow& r : rep.rows) {
    EXPECT_GT(r.samples, 0u);
    EXPECT_EQ(r.bound_violations, 0u);
    EXPECT_LT(r.max_bound_slack, 0.0);
    EXPECT_LE(r.fd_max_abs_err, 1e-5);
    EXPECT_GT(r.fd_checked, 0u);
  }
  EXPECT_NE(rep.find(SurrogateKind::AddCE, 4), nullptr);
  EXPECT_EQ(rep.find(SurrogateKind::ASM, 4), nullptr);
}

TEST(Probe, StarvationSigns) {
  const GeometryReport rep = starvation_probe(tiny(ProbeKind::Starvation));
  const GeometryRow* pic = rep.find(SurrogateKind::PiCCE, 2);
  const GeometryRow* due = rep.find(SurrogateKind::Decoupled, 2);
  ASSERT_NE(pic, nullptr);
  ASSERT_NE(due, nullptr);
  EXPECT_GT(pic->expert_grad.n, 0u);
  EXPECT_EQ(pic->positive_rate(), 1.0);
  EXPECT_EQ(due->positive_rate(), 0.0);
  EXPECT_GT(pic->expert_grad.mean, 0.0);
  EXPECT_LT(due->expert_grad.mean, 0.0);
  // Decoupled measures every correct expert, PiCCE only the suppressed one.
  EXPECT_EQ(due->expert_grad.n, 2 * pic->expert_grad.n);
}

TEST(Probe, CouplingBlock) {
  const GeometryReport rep = coupling_probe(tiny(ProbeKind::Coupling));
  for (int J : {1, 3}) {
    const GeometryRow* a = rep.find(SurrogateKind::ASM, J);
    const GeometryRow* d = rep.find(SurrogateKind::Decoupled, J);
    ASSERT_NE(a, nullptr);
    ASSERT_NE(d, nullptr);
    EXPECT_EQ(a->bound_violations, 0u);
    EXPECT_GT(a->mixed_norm.mean, 0.0);
    EXPECT_LE(a->fd_max_abs_err, 1e-5);
    EXPECT_EQ(d->mixed_norm.mean, 0.0);
    EXPECT_LE(d->fd_max_abs_err, 1e-8);
  }
}

TEST(Probe, CsvSchema) {
  GeometryReport rep;
  GeometryRow r;
  r.probe = "coupling";
  r.surrogate = SurrogateKind::ASM;
  r.J = 3;
  r.samples = 2;
  r.mixed_norm.add(0.1);
  r.mixed_norm.add(0.3);
  rep.rows.push_back(r);
  const io::CsvTable t = io::parse_csv(geometry_csv(rep));
  const std::vector<std::string> expect{
      "probe", "surrogate", "J", "samples", "nonconverged", "grad_norm_mean", "grad_norm_std",
      "top_eig_mean", "top_eig_std", "expert_grad_mean", "expert_grad_std", "positive_rate",
      "mixed_norm_mean", "mixed_norm_std", "bound_violations", "max_bound_slack", "fd_checked",
      "fd_max_abs_err"};
  EXPECT_EQ(t.header, expect);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][1], "asm");
  EXPECT_EQ(std::stod(t.rows[0][static_cast<std::size_t>(t.column("mixed_norm_mean"))]), 0.2);
  EXPECT_EQ(t.rows[0][static_cast<std::size_t>(t.column("top_eig_mean"))], "");
}
