#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "mfilgn/config.hpp"
#include "mfilgn/dataset.hpp"
#include "mfilgn/nss.hpp"
#include "mfilgn/regression.hpp"
#include "mfilgn/viewport.hpp"
#include "mfilgn/wavelet.hpp"

namespace {

// Smooth gradient plus noise, clamped to the 8-bit range.
mfilgn::Raster synthetic_erp(std::size_t w, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 12.0);
  mfilgn::Raster img(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double v = 128.0 + 60.0 * std::sin(0.03 * static_cast<double>(x)) *
                                   std::cos(0.05 * static_cast<double>(y)) + noise(rng);
      img.at(x, y) = std::clamp(std::round(v), 0.0, 255.0);
    }
  }
  return img;
}

void BM_DhwtDecompose(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const mfilgn::Raster img = synthetic_erp(2 * side, side, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mfilgn::dhwt_decompose(img, mfilgn::HaarTransformSpec{3}));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.size()));
}
BENCHMARK(BM_DhwtDecompose)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Mscn(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const mfilgn::Raster img = synthetic_erp(side, side, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mfilgn::mscn(img, {}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(img.size()));
}
BENCHMARK(BM_Mscn)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_ExtractNss(benchmark::State& state) {
  const mfilgn::Raster img = synthetic_erp(256, 256, 3);
  for (auto _ : state) benchmark::DoNotOptimize(mfilgn::extract_nss(img));
}
BENCHMARK(BM_ExtractNss)->Unit(benchmark::kMillisecond);

void BM_ProjectViewport(benchmark::State& state) {
  const mfilgn::Raster erp = synthetic_erp(2048, 1024, 4);
  const mfilgn::ViewportSpec spec{30.0, 20.0, 90.0, static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(mfilgn::project_viewport(erp, spec));
}
BENCHMARK(BM_ProjectViewport)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ExtractImageFeatures(benchmark::State& state) {
  const mfilgn::Raster erp = synthetic_erp(1024, 512, 5);
  mfilgn::PipelineConfig cfg;
  cfg.viewports.viewport_size = 128;
  for (auto _ : state) benchmark::DoNotOptimize(mfilgn::extract_image_features(erp, cfg));
}
BENCHMARK(BM_ExtractImageFeatures)->Unit(benchmark::kMillisecond);

void BM_TrainSvr(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t dim = 84;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(0.0, 1.0);
  mfilgn::Matrix x(n, dim);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      x(i, j) = normal(rng);
      s += x(i, j);
    }
    y[i] = 50.0 + 10.0 * std::tanh(0.2 * s);
  }
  for (auto _ : state) benchmark::DoNotOptimize(mfilgn::train_svr(x, y));
}
BENCHMARK(BM_TrainSvr)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
