#include <benchmark/benchmark.h>

#include <vector>

#include "pcl/kernels.hpp"
#include "pcl/rng.hpp"

using namespace pcl;
using namespace pcl::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Sizes between the tiny test heads and the published heads.
const DenseShape kDense{106 * 256, 106};
const ConvShape kConv{1, 106, 256, 64, 10, 10};

template <Exec E>
void BM_DenseForward(benchmark::State& st) {
  const auto w = random_vec(kDense.in * kDense.out, 1), b = random_vec(kDense.out, 2),
             x = random_vec(kDense.in, 3);
  std::vector<double> y(kDense.out);
  for (auto _ : st) {
    dense_forward(E, kDense, w, b, x, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <Exec E>
void BM_DenseBackwardInput(benchmark::State& st) {
  const auto w = random_vec(kDense.in * kDense.out, 1), dy = random_vec(kDense.out, 2);
  std::vector<double> dx(kDense.in);
  for (auto _ : st) {
    dense_backward_input(E, kDense, w, dy, dx);
    benchmark::DoNotOptimize(dx.data());
  }
}

template <Exec E>
void BM_ConvForward(benchmark::State& st) {
  const auto in = random_vec(kConv.height * kConv.width, 1);
  const auto k = random_vec(kConv.filters * kConv.kernel_h * kConv.kernel_w, 2);
  const auto b = random_vec(kConv.filters, 3);
  std::vector<double> out(kConv.filters * kConv.out_h() * kConv.out_w());
  for (auto _ : st) {
    conv2d_forward(E, kConv, in, k, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <Exec E>
void BM_ConvBackward(benchmark::State& st) {
  const auto in = random_vec(kConv.height * kConv.width, 1);
  const auto k = random_vec(kConv.filters * kConv.kernel_h * kConv.kernel_w, 2);
  const auto dout = random_vec(kConv.filters * kConv.out_h() * kConv.out_w(), 3);
  std::vector<double> din(in.size()), dk(k.size()), db(kConv.filters);
  for (auto _ : st) {
    conv2d_backward_input(E, kConv, dout, k, din);
    conv2d_backward_params(E, kConv, in, dout, dk, db);
    benchmark::DoNotOptimize(din.data());
    benchmark::DoNotOptimize(dk.data());
  }
}

}  // namespace

BENCHMARK_TEMPLATE(BM_DenseForward, Exec::serial)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_DenseForward, Exec::parallel)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_DenseBackwardInput, Exec::serial)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_DenseBackwardInput, Exec::parallel)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_ConvForward, Exec::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_ConvForward, Exec::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_ConvBackward, Exec::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_ConvBackward, Exec::parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
