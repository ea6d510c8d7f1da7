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

#ifndef VOICELIKE_AUGMENT_HPP_
#define VOICELIKE_AUGMENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "voicelike/audio.hpp"

namespace voicelike {

// Impulse responses are mono waveforms; they are resampled to the target
// waveform's rate before convolution.
using ImpulseResponse = Waveform;

struct AugmentConfig {
  float max_pad_sec = 0.5f;
  float snr_db_min = 10.0f;
  float snr_db_max = 40.0f;
  float reverb_prob = 0.5f;
  float noise_prob = 0.5f;
  float reverse_prob = 0.5f;
  float pad_prob = 0.5f;
  std::string ir_dir;

  void validate() const;
};

// Decisions drawn for one augmentation pass. Drawing them all up front (in a
// fixed order from one seeded generator) makes the chain reproducible and
// lets tests re-apply the individual transforms with identical parameters.
struct AugmentPlan {
  bool do_pad = false;
  std::size_t pad_pre = 0;
  std::size_t pad_post = 0;
  bool do_reverb = false;
  std::size_t ir_index = 0;
  bool do_noise = false;
  float snr_db = 0.0f;
  std::uint64_t noise_seed = 0;
  bool do_reverse = false;
};

// Derives the plan for (cfg, seed). n_irs == 0 disables the reverb step.
AugmentPlan plan_augment(const AugmentConfig& cfg, int sample_rate,
                         std::size_t n_irs, std::uint64_t seed);

// Silence prepended/appended; middle bit-identical.
Waveform pad_silence(const Waveform& w, std::size_t pre_samples,
                     std::size_t post_samples);

// Seeded Gaussian noise scaled so the empirical power ratio satisfies
// 10*log10(P_signal / P_noise) == snr_db. Errors on an all-zero signal.
Waveform add_white_noise(const Waveform& w, float snr_db, std::uint64_t seed);

// Full linear convolution truncated to len(w), no normalization.
std::vector<float> convolve_truncated(const std::vector<float>& x,
                                      const std::vector<float>& ir);

// Convolution with the IR (rate-matched first), then peak-normalized back to
// the input's peak.
Waveform convolve_reverb(const Waveform& w, const ImpulseResponse& ir);

Waveform time_reverse(const Waveform& w);

// pad -> reverb -> noise -> reverse, each applied per the plan drawn from
// (cfg, seed). Deterministic; equals manual composition of the four
// transforms with the same plan.
Waveform augment_chain(const Waveform& w, const AugmentConfig& cfg,
                       const std::vector<ImpulseResponse>& irs,
                       std::uint64_t seed);

// Loads every .wav in a directory as a mono impulse response. Missing or
// empty directories yield an empty list (reverb then becomes a no-op).
std::vector<ImpulseResponse> load_impulse_responses(const std::string& dir);

}  // namespace voicelike

#endif  // VOICELIKE_AUGMENT_HPP_
