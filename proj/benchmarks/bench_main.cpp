#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "deferlab/numkit.hpp"
#include "deferlab/surrogates.hpp"
#include "deferlab/synth_suites.hpp"
#include "deferlab/trainer.hpp"

using namespace deferlab;

namespace {

void BM_LossGrad(benchmark::State& state) {
  const auto kind = static_cast<SurrogateKind>(state.range(0));
  const int K = 16, J = static_cast<int>(state.range(1));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::vector<double> z(static_cast<std::size_t>(K + J));
  for (double& v : z) v = g(rng);
  Sample s{{1.0}, 3, std::vector<int>(static_cast<std::size_t>(J), 3)};
  for (int j = 0; j < J; j += 2) s.m[static_cast<std::size_t>(j)] = 0;
  SurrogateConfig cfg;
  cfg.kind = kind;
  for (auto _ : state) benchmark::DoNotOptimize(loss_grad(cfg, K, z, s));
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_LossGrad)->ArgsProduct({{0, 1, 2, 3, 4, 5}, {4, 24}});

void BM_TopEigSym(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  std::vector<double> logits(n);
  for (double& v : logits) v = g(rng);
  const numkit::DenseMatrix h = numkit::softmax_covariance(numkit::softmax(logits));
  for (auto _ : state) benchmark::DoNotOptimize(numkit::top_eig_sym(h));
}
BENCHMARK(BM_TopEigSym)->Arg(8)->Arg(40)->Arg(100);

void BM_TrainEpoch(benchmark::State& state) {
  SuiteSpec spec = SuiteSpec::defaults(SuiteKind::NestedRedundant);
  spec.n_val = 200;
  const LabeledDataset tr = generate(spec, Split::Train);
  const LabeledDataset va = generate(spec, Split::Val);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.surrogate.kind = static_cast<SurrogateKind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train(tr, va, cfg));
  state.SetLabel(std::string(to_string(cfg.surrogate.kind)));
}
BENCHMARK(BM_TrainEpoch)->DenseRange(0, 5)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
