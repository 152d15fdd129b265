// OpenMP kernels against the single-threaded reference path. Run with
// OMP_NUM_THREADS set to compare; on one core the two should match.

#include <map>
#include <memory>
#include <random>

#include <benchmark/benchmark.h>

#include "jacfast/reference.hpp"
#include "jacfast/tensor_transform.hpp"
#include "jacfast/transform1d.hpp"

namespace {

using namespace jacfast;

const TransformPlan& plan_1d(std::int64_t n) {
  static std::map<std::int64_t, std::unique_ptr<TransformPlan>> cache;
  auto& p = cache[n];
  if (!p) p = std::make_unique<TransformPlan>(build_plan_1d(JacobiParams(0.25, 0.25), n, PlanOptions{.seed = 1}));
  return *p;
}

const TensorPlan& plan_nd(std::int64_t n, int dims) {
  static std::map<std::pair<std::int64_t, int>, std::unique_ptr<TensorPlan>> cache;
  auto& p = cache[{n, dims}];
  if (!p) p = std::make_unique<TensorPlan>(build_tensor_plan(JacobiParams(0.25, 0.25), n, dims, PlanOptions{.seed = 1}));
  return *p;
}

std::vector<double> input(std::size_t n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

void BM_Forward1dParallel(benchmark::State& st) {
  const auto& plan = plan_1d(st.range(0));
  const auto x = input(static_cast<std::size_t>(plan.n()));
  std::vector<double> out(x.size());
  for (auto _ : st) {
    apply_forward(plan, x, out, true);
    benchmark::DoNotOptimize(out.data());
  }
  st.counters["rank"] = static_cast<double>(plan.rank());
}

void BM_Forward1dSerial(benchmark::State& st) {
  const auto& plan = plan_1d(st.range(0));
  const auto x = input(static_cast<std::size_t>(plan.n()));
  for (auto _ : st) benchmark::DoNotOptimize(reference::forward_serial(plan, x));
}

void BM_Inverse1dParallel(benchmark::State& st) {
  const auto& plan = plan_1d(st.range(0));
  const auto x = input(static_cast<std::size_t>(plan.n()));
  std::vector<double> out(x.size());
  for (auto _ : st) {
    apply_inverse(plan, x, out, true);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_Inverse1dSerial(benchmark::State& st) {
  const auto& plan = plan_1d(st.range(0));
  const auto x = input(static_cast<std::size_t>(plan.n()));
  for (auto _ : st) benchmark::DoNotOptimize(reference::inverse_serial(plan, x));
}

void BM_DirectSummation(benchmark::State& st) {
  const auto& plan = plan_1d(st.range(0));
  const auto x = input(static_cast<std::size_t>(plan.n()));
  for (auto _ : st) benchmark::DoNotOptimize(reference::forward(plan.params(), plan.points(), plan.weights(), x));
}

void BM_ForwardNd(benchmark::State& st) {
  const auto& plan = plan_nd(st.range(0), static_cast<int>(st.range(1)));
  const auto x = input(plan.size());
  for (auto _ : st) benchmark::DoNotOptimize(forward_nd(plan, x));
}

}  // namespace

BENCHMARK(BM_Forward1dParallel)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Forward1dSerial)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Inverse1dParallel)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Inverse1dSerial)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DirectSummation)->Arg(1 << 10)->Arg(1 << 12)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ForwardNd)->Args({64, 2})->Args({256, 2})->Args({32, 3})->Args({64, 3})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
