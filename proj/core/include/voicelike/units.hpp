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

#ifndef VOICELIKE_UNITS_HPP_
#define VOICELIKE_UNITS_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace voicelike {

// Frame-level feature matrix, either loaded from a feature file or computed
// from the internal log-Mel front end.
enum class FeatureSource { kExternalFile, kInternalMel };

struct FeatureSequence {
  std::vector<std::vector<float>> frames;  // T x D_f
  FeatureSource source = FeatureSource::kInternalMel;

  std::size_t num_frames() const { return frames.size(); }
  std::size_t dim() const { return frames.empty() ? 0 : frames[0].size(); }
};

struct Codebook {
  std::vector<std::vector<float>> centroids;  // k x D_f
  std::vector<std::uint64_t> counts;          // per-centroid update counts
  std::uint64_t seed = 0;

  std::size_t k() const { return centroids.size(); }
  std::size_t dim() const { return centroids.empty() ? 0 : centroids[0].size(); }
};

// Discrete unit ids in [0, k). When run_lengths is present, consecutive ids
// are all distinct and the run lengths sum to the pre-dedup length.
struct UnitSequence {
  std::vector<int> ids;
  std::vector<int> run_lengths;  // empty unless deduped

  bool has_runs() const { return !run_lengths.empty() || ids.empty(); }
};

struct KMeansConfig {
  int k = 100;
  int batch_size = 1024;
  int iterations = 0;  // 0 means 10*k
  std::uint64_t seed = 0;
};

// Mini-batch k-means with k-means++ seeding on an initial sample and a
// 1/count per-centroid learning rate. Centroids that never receive an
// assignment are reseeded from random batch frames. Deterministic under seed.
Codebook fit_minibatch_kmeans(const std::vector<std::vector<float>>& frames,
                              const KMeansConfig& cfg);

// Nearest centroid per frame (squared Euclidean), ties to the lowest index.
UnitSequence quantize(const Codebook& cb, const FeatureSequence& feats);

// Collapses maximal runs of identical ids, recording run lengths.
UnitSequence dedup_runs(const UnitSequence& u);

// Exact inverse of dedup_runs. Requires run lengths.
UnitSequence expand_runs(const UnitSequence& u);

// Sum of squared distances to the nearest centroid.
double inertia(const Codebook& cb, const std::vector<std::vector<float>>& frames);

// Feature file ("LKBF"): magic, u32 T, u32 D_f, float32 rows.
void save_features(const FeatureSequence& f, const std::string& path);
FeatureSequence load_features(const std::string& path);

// Codebook file ("LKBC"): magic, u32 k, u32 D_f, float32 centroid rows, u64
// counts.
void save_codebook(const Codebook& cb, const std::string& path);
Codebook load_codebook(const std::string& path);

}  // namespace voicelike

#endif  // VOICELIKE_UNITS_HPP_
