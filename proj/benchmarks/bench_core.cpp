// Copyright (c) 2026 VoiceLike Authors
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

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

#include "voicelike/audio.hpp"
#include "voicelike/converter.hpp"
#include "voicelike/metrics.hpp"
#include "voicelike/predictor.hpp"
#include "voicelike/units.hpp"

using namespace voicelike;

namespace {

Waveform bench_tone(int rate, std::size_t n) {
  std::vector<float> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = static_cast<float>(
        0.4 * std::sin(2.0 * std::numbers::pi * 220.0 * i / rate) +
        0.2 * std::sin(2.0 * std::numbers::pi * 663.0 * i / rate));
  return Waveform::mono(std::move(x), rate);
}

void BM_LogMelSpectrogram(benchmark::State& state) {
  Waveform w = bench_tone(22050, static_cast<std::size_t>(state.range(0)));
  MelConfig cfg;
  for (auto _ : state) {
    MelSpectrogram mel = log_mel_spectrogram(w, cfg);
    benchmark::DoNotOptimize(mel.frames.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogMelSpectrogram)->Arg(22050)->Arg(88200);

void BM_Resample2to1(benchmark::State& state) {
  Waveform w = bench_tone(44100, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Waveform r = resample(w, 22050);
    benchmark::DoNotOptimize(r.samples().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Resample2to1)->Arg(44100);

void BM_PredictorForward(benchmark::State& state) {
  PredictorModel model = build_model(1);
  MelSpectrogram mel;
  mel.config = model.mel;
  mel.sample_rate = 22050;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  mel.frames.assign(static_cast<std::size_t>(state.range(0)),
                    std::vector<float>(80));
  for (auto& f : mel.frames)
    for (auto& v : f) v = u(rng);
  for (auto _ : state) {
    LikabilityRating y = predict_raw(model, mel);
    benchmark::DoNotOptimize(y.values.data());
  }
}
BENCHMARK(BM_PredictorForward)->Arg(100)->Arg(341);

void BM_Quantize(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Codebook cb;
  cb.centroids.assign(static_cast<std::size_t>(state.range(0)),
                      std::vector<float>(80));
  for (auto& c : cb.centroids)
    for (auto& v : c) v = u(rng);
  cb.counts.assign(cb.k(), 1);
  FeatureSequence f;
  f.frames.assign(341, std::vector<float>(80));
  for (auto& fr : f.frames)
    for (auto& v : fr) v = u(rng);
  for (auto _ : state) {
    UnitSequence q = quantize(cb, f);
    benchmark::DoNotOptimize(q.ids.data());
  }
  state.SetItemsProcessed(state.iterations() * 341);
}
BENCHMARK(BM_Quantize)->Arg(100)->Arg(1000);

void BM_SpearmanSrcc(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> p(static_cast<std::size_t>(state.range(0)));
  std::vector<double> t(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = u(rng);
    t[i] = u(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(spearman_srcc(p, t));
  }
}
BENCHMARK(BM_SpearmanSrcc)->Arg(300)->Arg(2000);

void BM_GriffinLim(benchmark::State& state) {
  MelConfig cfg;
  cfg.n_mels = 80;
  Waveform w = bench_tone(22050, 22050);
  MelSpectrogram mel = log_mel_spectrogram(w, cfg);
  for (auto _ : state) {
    Waveform out = griffin_lim_vocoder(mel, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(out.samples().data());
  }
}
BENCHMARK(BM_GriffinLim)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
