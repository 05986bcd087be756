#include <benchmark/benchmark.h>

#include <vector>

#include "smdl/kernels/dataset_loss.hpp"
#include "smdl/kernels/sublevel.hpp"
#include "smdl/zoo/landscape.hpp"

using namespace smdl;

namespace {

void run_sublevel(benchmark::State& state, kernels::Exec exec) {
  const auto k = zoo::make_normal_crossing({{1, 2}, {0, 1}});
  const std::vector<double> eps{0.25, 0.0625, 0.015625, 0.00390625, 0.0009765625};
  const kernels::MultiField f = [&](std::span<const double> w, std::span<double> out) { out[0] = k->value(w); };
  const auto samples = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    auto counts = kernels::count_sublevel(k->bounds(), 1, f, eps, samples, 1, exec);
    benchmark::DoNotOptimize(counts.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SublevelSerial(benchmark::State& s) { run_sublevel(s, kernels::Exec::serial); }
void BM_SublevelParallel(benchmark::State& s) { run_sublevel(s, kernels::Exec::parallel); }

void run_loss(benchmark::State& state, kernels::Exec exec) {
  const zoo::MlpModel model({{4, 16, 16, 4}});
  const auto data = zoo::make_teacher_dataset(model, {static_cast<std::size_t>(state.range(0))});
  const auto w = model.initialize(1.0, 3);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::dataset_loss(model, w, data, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DatasetLossSerial(benchmark::State& s) { run_loss(s, kernels::Exec::serial); }
void BM_DatasetLossParallel(benchmark::State& s) { run_loss(s, kernels::Exec::parallel); }

}  // namespace

BENCHMARK(BM_SublevelSerial)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_SublevelParallel)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_DatasetLossSerial)->Arg(1024)->Arg(16384);
BENCHMARK(BM_DatasetLossParallel)->Arg(1024)->Arg(16384);

BENCHMARK_MAIN();
