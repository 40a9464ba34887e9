// Copyright 2026 The tmsvlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Throughput of the hot paths: model building, synthesis, demodulation,
// resampling.

#include <numbers>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "tmsv/bootstrap.hpp"
#include "tmsv/dsp.hpp"
#include "tmsv/fir.hpp"
#include "tmsv/gaussian_state.hpp"
#include "tmsv/synth.hpp"

namespace {

using namespace tmsv;

ExperimentSetup reference_like() {
  ExperimentSetup s;
  s.source_a = {0.0177, 56.5, 0.0};
  s.source_b = {0.0224, 47.0, 0.0};
  s.budget.arm_a = {{"a", 0.975}, {"b", 0.990025}, {"c", 0.99}, {"d", 0.990025}, {"e", 0.99}, {"f", 0.99}};
  s.budget.arm_b = {{"a", 0.96}, {"b", 0.990025}, {"d", 0.990025}, {"e", 0.99}, {"f", 0.99}};
  return s;
}

void BM_BuildExperiment(benchmark::State& state) {
  const auto s = reference_like();
  const PhaseJitter j{0.002, 0.002, 0.002};
  for (auto _ : state) benchmark::DoNotOptimize(build_experiment(s, j).cov()(0, 0));
}
BENCHMARK(BM_BuildExperiment);

void BM_DesignLowpass(benchmark::State& state) {
  const int taps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(design_lowpass(50e3, 16e6, taps).data());
}
BENCHMARK(BM_DesignLowpass)->Arg(1023)->Arg(2047);

SynthConfig desk_synth() {
  SynthConfig c;
  c.target_cov = build_experiment(reference_like()).cov();
  c.spur_tones = {{2.11875e6, 10.0, 0.3}, {2.21875e6, 10.0, 1.1}, {4.875e6, 10.0, 2.0}, {5.125e6, 10.0, 2.9}};
  c.n_samples = 1 << 20;
  return c;
}

void BM_RfSynthesis(benchmark::State& state) {
  RfSynthesizer synth(desk_synth());
  Eigen::Matrix<double, 2, Eigen::Dynamic> block(2, 1 << 15);
  for (auto _ : state) {
    synth.generate(block);
    benchmark::DoNotOptimize(block.data());
  }
  state.SetItemsProcessed(state.iterations() * block.cols());
}
BENCHMARK(BM_RfSynthesis);

void BM_Demodulate(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<double> raw(1 << 16);
  for (double& v : raw) v = normal(rng);
  DemodConfig d;
  d.filter_taps = static_cast<int>(state.range(0));
  Demodulator demod(d, 16e6);
  std::vector<double> out;
  for (auto _ : state) {
    out.clear();
    demod.push(raw, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(raw.size()));
}
BENCHMARK(BM_Demodulate)->Arg(1023)->Arg(2047);

void BM_Bootstrap(benchmark::State& state) {
  const auto cov = build_experiment(reference_like()).cov();
  const auto stream = synthesize_baseband(cov, 100000, 0.4, 1.0, 3);
  std::vector<QuadratureSettingRecord> records;
  for (auto [a, b] : {std::pair{Quadrature::kX, Quadrature::kX}, {Quadrature::kX, Quadrature::kP},
                      {Quadrature::kP, Quadrature::kX}, {Quadrature::kP, Quadrature::kP}}) {
    QuadratureSettingRecord r;
    r.setting_a = a;
    r.setting_b = b;
    const int ia = a == Quadrature::kX ? 0 : 1;
    const int ib = b == Quadrature::kX ? 2 : 3;
    r.samples_a.assign(stream.row(ia).begin(), stream.row(ia).end());
    r.samples_b.assign(stream.row(ib).begin(), stream.row(ib).end());
    records.push_back(std::move(r));
  }
  BootstrapConfig c;
  c.n_chunks = 100;
  c.chunk_len = static_cast<std::size_t>(state.range(0));
  c.n_threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap(records, c).fit_mean);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.n_chunks * c.chunk_len));
}
BENCHMARK(BM_Bootstrap)->Arg(1000)->Arg(20000);

}  // namespace

// The distro benchmark_main archive carries foreign LTO bytecode.
BENCHMARK_MAIN();
