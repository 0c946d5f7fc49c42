#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "spedn/tensor/kernels.hpp"

namespace {

using Kernel = void (*)(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);

std::vector<double> fill(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Square m x k times k x n, or a single decoder-style row when rows == 1.
void run(benchmark::State& state, Kernel kernel, bool single_row) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t m = single_row ? 1 : n;
  auto a = fill(m * n, 1), b = fill(n * n, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    kernel(m, n, n, a.data(), b.data(), c.data());
    benchmark::DoNotOptimize(c.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * n * n));
}

void BM_gemm_nn_serial(benchmark::State& s) { run(s, spedn::tensor::kernels::serial::gemm_nn, false); }
void BM_gemm_nn_parallel(benchmark::State& s) { run(s, spedn::tensor::kernels::parallel::gemm_nn, false); }
void BM_gemm_nt_serial(benchmark::State& s) { run(s, spedn::tensor::kernels::serial::gemm_nt, false); }
void BM_gemm_nt_parallel(benchmark::State& s) { run(s, spedn::tensor::kernels::parallel::gemm_nt, false); }
void BM_gemm_tn_serial(benchmark::State& s) { run(s, spedn::tensor::kernels::serial::gemm_tn, false); }
void BM_gemm_tn_parallel(benchmark::State& s) { run(s, spedn::tensor::kernels::parallel::gemm_tn, false); }
void BM_row_nn_serial(benchmark::State& s) { run(s, spedn::tensor::kernels::serial::gemm_nn, true); }
void BM_row_nn_parallel(benchmark::State& s) { run(s, spedn::tensor::kernels::parallel::gemm_nn, true); }
void BM_row_nt_serial(benchmark::State& s) { run(s, spedn::tensor::kernels::serial::gemm_nt, true); }
void BM_row_nt_parallel(benchmark::State& s) { run(s, spedn::tensor::kernels::parallel::gemm_nt, true); }

}  // namespace

BENCHMARK(BM_gemm_nn_serial)->RangeMultiplier(2)->Range(32, 512);
BENCHMARK(BM_gemm_nn_parallel)->RangeMultiplier(2)->Range(32, 512)->UseRealTime();
BENCHMARK(BM_gemm_nt_serial)->RangeMultiplier(2)->Range(32, 512);
BENCHMARK(BM_gemm_nt_parallel)->RangeMultiplier(2)->Range(32, 512)->UseRealTime();
BENCHMARK(BM_gemm_tn_serial)->RangeMultiplier(2)->Range(32, 512);
BENCHMARK(BM_gemm_tn_parallel)->RangeMultiplier(2)->Range(32, 512)->UseRealTime();
BENCHMARK(BM_row_nn_serial)->RangeMultiplier(4)->Range(256, 4096);
BENCHMARK(BM_row_nn_parallel)->RangeMultiplier(4)->Range(256, 4096)->UseRealTime();
BENCHMARK(BM_row_nt_serial)->RangeMultiplier(4)->Range(256, 4096);
BENCHMARK(BM_row_nt_parallel)->RangeMultiplier(4)->Range(256, 4096)->UseRealTime();

BENCHMARK_MAIN();
