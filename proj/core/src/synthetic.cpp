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

#include "voicelike/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>

#include "voicelike/common.hpp"

namespace voicelike {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kHarmonics = 10;

// Group-specific monotone slopes: every listener group prefers the same tilt
// direction with slightly different strength.
constexpr std::array<float, 4> kGroupSlopes = {0.85f, 0.75f, 0.9f, 0.8f};

}  // namespace

std::vector<SyntheticClip> generate_synthetic_clips(const SyntheticConfig& cfg) {
  if (cfg.speakers <= 0 || cfg.clips_per_speaker <= 0)
    throw ConfigError("synthetic: speakers and clips_per_speaker must be > 0");
  if (cfg.val_fraction < 0 || cfg.test_fraction < 0 ||
      cfg.val_fraction + cfg.test_fraction >= 1.0f)
    throw ConfigError("synthetic: invalid split fractions");

  std::mt19937_64 speaker_rng(mix_seed(cfg.seed, 0x5bea));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct SpeakerTemplate {
    double f0;
    std::array<double, kHarmonics> weights;
    std::array<double, kHarmonics> phases;
    double vibrato_rate;
  };
  std::vector<SpeakerTemplate> templates;
  for (int s = 0; s < cfg.speakers; ++s) {
    SpeakerTemplate t;
    // Fundamentals spaced geometrically over a speech-like range.
    const double lo = 110.0, hi = 320.0;
    t.f0 = cfg.speakers > 1
               ? lo * std::pow(hi / lo,
                               static_cast<double>(s) / (cfg.speakers - 1))
               : 180.0;
    for (int h = 0; h < kHarmonics; ++h) {
      t.weights[static_cast<std::size_t>(h)] = 0.3 + 0.7 * unit(speaker_rng);
      t.phases[static_cast<std::size_t>(h)] = 2.0 * kPi * unit(speaker_rng);
    }
    t.vibrato_rate = 4.0 + 3.0 * unit(speaker_rng);
    templates.push_back(t);
  }

  const std::size_t n_samples = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.clip_seconds) * cfg.sample_rate));
  std::vector<SyntheticClip> clips;
  for (int s = 0; s < cfg.speakers; ++s) {
    const SpeakerTemplate& tpl = templates[static_cast<std::size_t>(s)];
    for (int c = 0; c < cfg.clips_per_speaker; ++c) {
      std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(s),
                                   static_cast<std::uint64_t>(c)));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::normal_distribution<double> gauss(0.0, 1.0);

      SyntheticClip clip;
      clip.id = "spk" + std::to_string(s) + "_clip" + std::to_string(c);
      clip.speaker = "spk" + std::to_string(s);
      // Tilt magnitude is kept away from zero so liked/disliked labels are
      // well defined for most clips.
      const double mag = 0.15 + 0.85 * u(rng);
      clip.tilt = static_cast<float>(u(rng) < 0.5 ? -mag : mag);
      for (std::size_t g = 0; g < 4; ++g) {
        const double r = kGroupSlopes[g] * clip.tilt +
                         cfg.rating_noise * gauss(rng);
        clip.ratings[g] = std::clamp(r, -1.0, 1.0);
      }

      const double vib_depth = 0.01 + 0.02 * u(rng);
      const double am_rate = 1.5 + 2.0 * u(rng);
      const double am_phase = 2.0 * kPi * u(rng);
      const double f0 = tpl.f0 * (0.97 + 0.06 * u(rng));

      // Harmonic rolloff: base 1/h, shifted by the clip tilt. Positive tilt
      // boosts high harmonics (brighter), negative damps them.
      std::array<double, kHarmonics> amps;
      double peak = 0.0;
      for (int h = 0; h < kHarmonics; ++h) {
        const double hh = h + 1;
        amps[static_cast<std::size_t>(h)] =
            tpl.weights[static_cast<std::size_t>(h)] *
            std::pow(hh, -1.0 + 1.5 * clip.tilt);
        peak += amps[static_cast<std::size_t>(h)];
      }

      std::vector<float> x(n_samples);
      for (std::size_t i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / cfg.sample_rate;
        const double vib =
            1.0 + vib_depth * std::sin(2.0 * kPi * tpl.vibrato_rate * t);
        const double am =
            0.6 + 0.4 * std::sin(2.0 * kPi * am_rate * t + am_phase);
        double v = 0.0;
        for (int h = 0; h < kHarmonics; ++h) {
          const double hh = h + 1;
          v += amps[static_cast<std::size_t>(h)] *
               std::sin(2.0 * kPi * hh * f0 * vib * t +
                        tpl.phases[static_cast<std::size_t>(h)]);
        }
        x[i] = static_cast<float>(0.5 * am * v / peak);
      }
      clip.audio = Waveform::mono(std::move(x), cfg.sample_rate);
      clips.push_back(std::move(clip));
    }
  }

  // Global split assignment with exact counts.
  const std::size_t n = clips.size();
  const std::size_t n_val = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * cfg.val_fraction));
  const std::size_t n_test = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * cfg.test_fraction));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(mix_seed(cfg.seed, 0x5717));
  std::shuffle(order.begin(), order.end(), split_rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_val) clips[order[i]].split = Split::kVal;
    else if (i < n_val + n_test) clips[order[i]].split = Split::kTest;
    else clips[order[i]].split = Split::kTrain;
  }
  return clips;
}

DatasetManifest generate_synthetic_corpus(const SyntheticConfig& cfg,
                                          const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "wav");
  std::vector<SyntheticClip> clips = generate_synthetic_clips(cfg);
  DatasetManifest manifest;
  for (const auto& clip : clips) {
    const std::string rel = "wav/" + clip.id + ".wav";
    save_wav_pcm16(clip.audio, (fs::path(out_dir) / rel).string());
    ManifestRecord rec;
    rec.id = clip.id;
    rec.audio = rel;
    rec.split = clip.split;
    rec.speaker = clip.speaker;
    rec.ratings = clip.ratings;
    manifest.records.push_back(std::move(rec));
  }
  save_manifest(manifest, (fs::path(out_dir) / "manifest.jsonl").string());
  return manifest;
}

}  // namespace voicelike
