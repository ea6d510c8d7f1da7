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

#ifndef VOICELIKE_SYNTHETIC_HPP_
#define VOICELIKE_SYNTHETIC_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "voicelike/audio.hpp"
#include "voicelike/manifest.hpp"

namespace voicelike {

// Desk-scale corpus generator. Speakers are distinct harmonic templates
// (fundamental + per-speaker harmonic weights); the planted likability is a
// monotone function of each clip's spectral tilt plus Gaussian noise, so a
// mel-based predictor can recover it.
struct SyntheticConfig {
  int speakers = 4;
  int clips_per_speaker = 50;
  float clip_seconds = 4.0f;
  int sample_rate = 22050;
  float val_fraction = 1.0f / 6.0f;
  float test_fraction = 1.0f / 6.0f;
  float rating_noise = 0.03f;
  std::uint64_t seed = 0;
};

struct SyntheticClip {
  std::string id;
  std::string speaker;
  Split split = Split::kTrain;
  float tilt = 0.0f;  // the controlled acoustic property
  std::array<double, 4> ratings{};
  Waveform audio;
};

std::vector<SyntheticClip> generate_synthetic_clips(const SyntheticConfig& cfg);

// Writes <out_dir>/wav/<id>.wav for every clip plus <out_dir>/manifest.jsonl
// (audio paths relative to out_dir). Returns the manifest.
DatasetManifest generate_synthetic_corpus(const SyntheticConfig& cfg,
                                          const std::string& out_dir);

}  // namespace voicelike

#endif  // VOICELIKE_SYNTHETIC_HPP_
