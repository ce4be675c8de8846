// Serial reference kernels against their OpenMP counterparts. The second
// benchmark argument selects the variant: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <random>

#include "lomo/distortion.hpp"
#include "lomo/kernels.hpp"

using namespace lomo;

namespace {

kernels::Exec exec_of(const benchmark::State& state) {
  return state.range(1) ? kernels::Exec::parallel : kernels::Exec::serial;
}

Bitmap noise_bitmap(int w, int h) {
  Bitmap img(w, h, Rgb{255, 255, 255});
  std::mt19937 rng(1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto v = static_cast<std::uint8_t>(rng() & 0xFF);
      img.set(x, y, {v, v, v});
    }
  return img;
}

Plane noise_plane(int w, int h) {
  Plane p(w, h);
  std::mt19937 rng(2);
  std::uniform_real_distribution<float> u(0.0f, 255.0f);
  for (auto& v : p.data) v = u(rng);
  return p;
}

void BM_ConvolveSeparable(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Plane in = noise_plane(side, side);
  const auto taps = gaussian_taps(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::convolve_separable(in, taps, taps, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * side * side);
}

void BM_Rotate(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Bitmap in = noise_bitmap(side, side / 2);
  const auto [w, h] = rotated_extent(in.width(), in.height(), 3.5);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::rotate_bilinear(in, 3.5, w, h, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * w * h);
}

void BM_Downscale(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Bitmap in = noise_bitmap(side, side);
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::downscale_area(in, side / 3, side / 3, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * side * side);
}

void BM_AccumulateMoments(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), dim = 64;
  std::vector<float> data(static_cast<std::size_t>(n) * dim);
  std::mt19937 rng(3);
  std::normal_distribution<float> g;
  for (auto& v : data) v = g(rng);
  std::vector<std::uint32_t> rows(n);
  for (int i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::accumulate_moments(data, dim, rows, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(BM_ConvolveSeparable)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rotate)->ArgsProduct({{512, 2048}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Downscale)->ArgsProduct({{768, 2304}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AccumulateMoments)->ArgsProduct({{4096, 65536}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
