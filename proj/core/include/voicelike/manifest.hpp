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

#ifndef VOICELIKE_MANIFEST_HPP_
#define VOICELIKE_MANIFEST_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace voicelike {

enum class Split { kTrain, kVal, kTest };

Split split_from_string(const std::string& s);
std::string split_to_string(Split s);

// One utterance of a JSON Lines dataset manifest. Fields:
//   {id, audio, split in {train,val,test}, ratings: [4 floats]|null, speaker,
//    text?, features?, embedding?}
// Annotation adds ratings_pred and, when ratings were overwritten,
// ratings_orig.
struct ManifestRecord {
  std::string id;
  std::string audio;
  Split split = Split::kTrain;
  std::string speaker;
  std::optional<std::array<double, 4>> ratings;
  std::optional<std::string> text;
  std::optional<std::string> features;
  std::optional<std::string> embedding;
  std::optional<std::array<double, 4>> ratings_pred;
  std::optional<std::array<double, 4>> ratings_orig;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;

  std::vector<const ManifestRecord*> split_records(Split s) const;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

std::string record_to_json_line(const ManifestRecord& r);
ManifestRecord record_from_json_line(const std::string& line);

}  // namespace voicelike

#endif  // VOICELIKE_MANIFEST_HPP_
