#include <benchmark/benchmark.h>

#include <random>

#include "pano/blend.hpp"
#include "pano/flow.hpp"
#include "pano/seams.hpp"
#include "pano/serial.hpp"
#include "pano/synth.hpp"

namespace {

pano::Cubemap noise_cubemap(int n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  pano::Cubemap c(n, 3);
  for (int i = 0; i < pano::kNumFaces; ++i)
    for (double& v : c.face(i).data()) v = u(rng);
  return c;
}

void BM_ErpToCube(benchmark::State& st) {
  const auto erp = pano::render_erp(pano::analytic_test_function(3), 1024, 512, 3);
  for (auto _ : st) benchmark::DoNotOptimize(pano::erp_to_cubemap(erp, static_cast<int>(st.range(0))));
}
void BM_ErpToCubeSerial(benchmark::State& st) {
  const auto erp = pano::render_erp(pano::analytic_test_function(3), 1024, 512, 3);
  for (auto _ : st) benchmark::DoNotOptimize(pano::serial::erp_to_cubemap(erp, static_cast<int>(st.range(0))));
}

void BM_CubeToErp(benchmark::State& st) {
  const auto cube = noise_cubemap(256);
  for (auto _ : st) benchmark::DoNotOptimize(pano::cubemap_to_erp(cube, 1024, 512));
}
void BM_CubeToErpSerial(benchmark::State& st) {
  const auto cube = noise_cubemap(256);
  for (auto _ : st) benchmark::DoNotOptimize(pano::serial::cubemap_to_erp(cube, 1024, 512));
}

void BM_Blend(benchmark::State& st) {
  const auto cube = noise_cubemap(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(pano::cross_face_blend(cube));
}
void BM_BlendSerial(benchmark::State& st) {
  const auto cube = noise_cubemap(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(pano::serial::cross_face_blend(cube));
}

void BM_Seams(benchmark::State& st) {
  const auto cube = noise_cubemap(512);
  for (auto _ : st) benchmark::DoNotOptimize(pano::seam_report(cube));
}
void BM_SeamsSerial(benchmark::State& st) {
  const auto cube = noise_cubemap(512);
  for (auto _ : st) benchmark::DoNotOptimize(pano::serial::seam_report(cube));
}

void BM_MatmulNt(benchmark::State& st) {
  std::mt19937_64 rng(2);
  pano::Matrix x(1536, 24), w(96, 24);
  pano::fill_normal(x, rng, 1.0);
  pano::fill_normal(w, rng, 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(pano::matmul_nt(x, w));
}
void BM_MatmulNtSerial(benchmark::State& st) {
  std::mt19937_64 rng(2);
  pano::Matrix x(1536, 24), w(96, 24);
  pano::fill_normal(x, rng, 1.0);
  pano::fill_normal(w, rng, 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(pano::serial::matmul_nt(x, w));
}

void BM_TrainStep(benchmark::State& st) {
  pano::ModelConfig mc;
  pano::JointFaceNetwork net(mc);
  const auto scenes = pano::make_toy_dataset(16, mc.face_size, 1);
  pano::BatchSampler sampler(scenes, 1);
  pano::TrainConfig tc;
  tc.optimizer = pano::OptimizerKind::Adam;
  tc.lr = 1e-3;
  pano::AdapterTrainer trainer(net, tc);
  for (auto _ : st) benchmark::DoNotOptimize(trainer.step(sampler.next(4)));
}

}  // namespace

BENCHMARK(BM_ErpToCube)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ErpToCubeSerial)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CubeToErp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CubeToErpSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Blend)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlendSerial)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Seams)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SeamsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatmulNt)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MatmulNtSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
