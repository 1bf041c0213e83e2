#include <benchmark/benchmark.h>

#include <random>

#include "mscv/costvol.hpp"
#include "mscv/disparity.hpp"
#include "mscv/network.hpp"
#include "mscv/synth.hpp"
#include "mscv/tensor.hpp"

namespace {

mscv::Image noise_plane(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  mscv::Image img(w, h, 1);
  for (double& v : img.data()) v = u(rng) / 255.0;
  return img;
}

mscv::Tensor noise_tensor(int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  mscv::Tensor t(c, h, w);
  for (float& v : t.data()) v = u(rng);
  return t;
}

// Half-scale KITTI planes: 620x188.
void BM_Census(benchmark::State& state) {
  const mscv::Image img = noise_plane(620, 188, 1);
  for (auto _ : state) benchmark::DoNotOptimize(mscv::census_transform(img));
}
BENCHMARK(BM_Census)->Unit(benchmark::kMillisecond);

void BM_HammingVolume(benchmark::State& state) {
  const auto l = mscv::census_transform(noise_plane(620, 188, 2));
  const auto r = mscv::census_transform(noise_plane(620, 188, 3));
  for (auto _ : state) benchmark::DoNotOptimize(mscv::hamming_cost_volume(l, r, mscv::kTraditionalDepth));
}
BENCHMARK(BM_HammingVolume)->Unit(benchmark::kMillisecond);

void BM_AssembleTraditional(benchmark::State& state) {
  const mscv::CostVolume c{noise_tensor(mscv::kTraditionalDepth, 188, 620, 4), mscv::Scale::half,
                           mscv::VolumeKind::matching_cost};
  for (auto _ : state) benchmark::DoNotOptimize(mscv::assemble_traditional(c, c, c));
}
BENCHMARK(BM_AssembleTraditional)->Unit(benchmark::kMillisecond);

void BM_Conv3x3(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0));
  const mscv::Tensor x = noise_tensor(ch, 94, 310, 5);
  mscv::ConvParams p;
  p.out_channels = p.in_channels = ch;
  p.kernel_h = p.kernel_w = 3;
  p.weights.assign(static_cast<std::size_t>(ch) * ch * 9, 0.01f);
  p.bias.assign(static_cast<std::size_t>(ch), 0.0f);
  for (auto _ : state) benchmark::DoNotOptimize(mscv::conv2d(x, p));
}
BENCHMARK(BM_Conv3x3)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Mask(benchmark::State& state) {
  const auto pair = mscv::generate_synthetic_pair(6, 1240, 376, mscv::parse_plan("8;40@300,100,700,300"));
  for (auto _ : state) benchmark::DoNotOptimize(mscv::discontinuity_mask(pair.gt));
}
BENCHMARK(BM_Mask)->Unit(benchmark::kMillisecond);

void BM_ForwardSmall(benchmark::State& state) {
  const auto pair = mscv::generate_synthetic_pair(7, 256, 128, mscv::parse_plan("6"));
  const mscv::Network net(mscv::init_weights(1));
  for (auto _ : state) benchmark::DoNotOptimize(net.full_forward(pair.left, pair.right));
}
BENCHMARK(BM_ForwardSmall)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace

BENCHMARK_MAIN();
