#include <benchmark/benchmark.h>

#include "nvtopo/dynamics.hpp"
#include "nvtopo/spectroscopy.hpp"

namespace {

const nvtopo::qw::QwParams kTp{-1.14, 0.165, 1.3};

void BM_HermitianEigen4(benchmark::State& state) {
  const auto h = nvtopo::qw::build_hqw(kTp, 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(nvtopo::linalg::hermitian_eigen(h));
}
BENCHMARK(BM_HermitianEigen4);

void BM_ExpmUnitary9(benchmark::State& state) {
  const auto h = nvtopo::nv::build_hnv_lab({});
  for (auto _ : state) benchmark::DoNotOptimize(nvtopo::linalg::expm_unitary(h, 0.005));
}
BENCHMARK(BM_ExpmUnitary9);

void BM_IdealSeries(benchmark::State& state) {
  const int m_max = static_cast<int>(state.range(0));
  const double tau = nvtopo::spectroscopy::default_tau(kTp, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nvtopo::spectroscopy::sample_series_ideal(kTp, 0.5, {5, false}, m_max, tau));
  }
}
BENCHMARK(BM_IdealSeries)->Arg(64)->Arg(256);

void BM_NoisyWorkingSpace(benchmark::State& state) {
  const auto drive = nvtopo::nv::qw_to_nv(kTp, 0.0, nvtopo::nv::kDefaultScale,
                                          nvtopo::spectroscopy::default_tau(kTp, 0.0) * 11.0);
  nvtopo::dynamics::NoiseModel noise{nvtopo::dynamics::sigma_b_from_t2star(3.0),
                                     static_cast<int>(state.range(0)), 1, false};
  const auto psi = nvtopo::spectroscopy::initial_superposition(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nvtopo::dynamics::working_space_series(drive, psi, 64, noise));
  }
}
BENCHMARK(BM_NoisyWorkingSpace)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SpectrumAndPeaks(benchmark::State& state) {
  const double tau = nvtopo::spectroscopy::default_tau(kTp, 0.5);
  const auto series = nvtopo::spectroscopy::sample_series_ideal(kTp, 0.5, {5, false}, 64, tau);
  for (auto _ : state) {
    auto spec = nvtopo::spectroscopy::spectrum(series, nvtopo::spectroscopy::Window::Rect, 8);
    benchmark::DoNotOptimize(nvtopo::spectroscopy::detect_peaks(spec));
  }
}
BENCHMARK(BM_SpectrumAndPeaks);

void BM_LabFrameSeries(benchmark::State& state) {
  const auto drive = nvtopo::nv::qw_to_nv(kTp, 1.0, nvtopo::nv::kDefaultScale, 0.4);
  nvtopo::dynamics::LabFrameOptions opt;
  opt.crosstalk = state.range(0) != 0;
  opt.check_convergence = false;
  const auto psi = nvtopo::spectroscopy::initial_superposition(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nvtopo::dynamics::lab_frame_series(drive, {}, psi, 16, {}, opt));
  }
}
BENCHMARK(BM_LabFrameSeries)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
