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

#include "voicelike/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "voicelike/common.hpp"

namespace voicelike {

using nlohmann::json;

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw DataError("manifest: unknown split '" + s + "'");
}

std::string split_to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

std::vector<const ManifestRecord*> DatasetManifest::split_records(
    Split s) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records)
    if (r.split == s) out.push_back(&r);
  return out;
}

namespace {

std::optional<std::array<double, 4>> ratings_from(const json& j,
                                                 const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  const auto& arr = j[key];
  if (!arr.is_array() || arr.size() != 4)
    throw DataError(std::string("manifest: '") + key +
                    "' must be an array of 4 numbers");
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = arr[i].get<double>();
  return out;
}

std::optional<std::string> string_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::string>();
}

}  // namespace

ManifestRecord record_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: invalid JSON line: ") + e.what());
  }
  if (!j.is_object()) throw DataError("manifest: line is not a JSON object");
  ManifestRecord r;
  if (!j.contains("id")) throw DataError("manifest: record missing 'id'");
  r.id = j["id"].get<std::string>();
  r.audio = j.value("audio", std::string());
  r.split = split_from_string(j.value("split", std::string("train")));
  r.speaker = j.value("speaker", std::string());
  r.ratings = ratings_from(j, "ratings");
  r.text = string_from(j, "text");
  r.features = string_from(j, "features");
  r.embedding = string_from(j, "embedding");
  r.ratings_pred = ratings_from(j, "ratings_pred");
  r.ratings_orig = ratings_from(j, "ratings_orig");
  return r;
}

std::string record_to_json_line(const ManifestRecord& r) {
  json j;
  j["id"] = r.id;
  j["audio"] = r.audio;
  j["split"] = split_to_string(r.split);
  j["speaker"] = r.speaker;
  if (r.ratings) {
    j["ratings"] = *r.ratings;
  } else {
    j["ratings"] = nullptr;
  }
  if (r.text) j["text"] = *r.text;
  if (r.features) j["features"] = *r.features;
  if (r.embedding) j["embedding"] = *r.embedding;
  if (r.ratings_pred) j["ratings_pred"] = *r.ratings_pred;
  if (r.ratings_orig) j["ratings_orig"] = *r.ratings_orig;
  return j.dump();
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("manifest: cannot open: " + path);
  DatasetManifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      m.records.push_back(record_from_json_line(line));
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("manifest: cannot open for write: " + path);
  for (const auto& r : m.records) os << record_to_json_line(r) << "\n";
  if (!os) throw DataError("manifest: write failed: " + path);
}

}  // namespace voicelike
