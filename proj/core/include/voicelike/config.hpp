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

#ifndef VOICELIKE_CONFIG_HPP_
#define VOICELIKE_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "voicelike/audio.hpp"
#include "voicelike/converter.hpp"
#include "voicelike/predictor.hpp"
#include "voicelike/synthetic.hpp"
#include "voicelike/units.hpp"

namespace voicelike {

// Run-wide configuration; the JSON config file mirrors this structure. Every
// field has a default (a zero-config run works end to end); unknown keys are
// rejected with the offending path in the message.
struct RunConfig {
  std::uint64_t seed = 1234;
  int threads = 0;  // 0 = auto (flag, then VOICELIKE_THREADS, then hardware)
  int sample_rate = 22050;
  MelConfig mel;
  TrainConfig train;
  KMeansConfig units;
  ConverterConfig converter;
  ConverterTrainConfig converter_train;
  SyntheticConfig synthetic;
  float s_eval = 2.5f;
  float target_min = -2.0f;
  float target_max = 2.0f;
  float target_step = 0.5f;

  std::vector<float> target_grid() const;
};

// Parses JSON text; missing keys keep defaults, unknown keys raise
// ConfigError.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Canonical JSON (sorted keys, all fields explicit).
std::string dump_run_config(const RunConfig& cfg);

// FNV-1a over the canonical dump; recorded in artifact names and reports.
std::string config_hash(const RunConfig& cfg);

}  // namespace voicelike

#endif  // VOICELIKE_CONFIG_HPP_
