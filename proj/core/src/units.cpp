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

#include "voicelike/units.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <unordered_set>

#include "voicelike/common.hpp"

namespace voicelike {

namespace {

double sq_dist(const std::vector<float>& a, const std::vector<float>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return acc;
}

std::size_t nearest_centroid(const std::vector<std::vector<float>>& centroids,
                             const std::vector<float>& x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_dist(centroids[c], x);
    if (d < best_d) {  // strict: ties keep the lowest index
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::size_t count_distinct(const std::vector<std::vector<float>>& frames) {
  std::unordered_set<std::string> seen;
  seen.reserve(frames.size());
  for (const auto& f : frames) {
    seen.emplace(reinterpret_cast<const char*>(f.data()),
                 f.size() * sizeof(float));
  }
  return seen.size();
}

// k-means++ over a sample: each next centroid drawn with probability
// proportional to the squared distance to the nearest chosen one.
std::vector<std::vector<float>> kmeans_pp_init(
    const std::vector<std::vector<float>>& sample, std::size_t k,
    std::mt19937_64& rng) {
  std::vector<std::vector<float>> centroids;
  centroids.reserve(k);
  std::uniform_int_distribution<std::size_t> first(0, sample.size() - 1);
  centroids.push_back(sample[first(rng)]);
  std::vector<double> d2(sample.size());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, sq_dist(c, sample[i]));
      d2[i] = best;
      total += best;
    }
    std::size_t pick;
    if (total <= 0.0) {
      std::uniform_int_distribution<std::size_t> any(0, sample.size() - 1);
      pick = any(rng);
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      pick = sample.size() - 1;
      double acc = 0.0;
      for (std::size_t i = 0; i < sample.size(); ++i) {
        acc += d2[i];
        if (r <= acc) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(sample[pick]);
  }
  return centroids;
}

}  // namespace

Codebook fit_minibatch_kmeans(const std::vector<std::vector<float>>& frames,
                              const KMeansConfig& cfg) {
  if (cfg.k <= 0) throw ConfigError("kmeans: k must be > 0");
  const std::size_t k = static_cast<std::size_t>(cfg.k);
  if (frames.size() < k)
    throw DataError("kmeans: fewer frames than clusters");
  if (count_distinct(frames) < k)
    throw DataError("kmeans: fewer distinct frames than clusters");
  const std::size_t batch =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.batch_size, 1)),
                            frames.size());
  const int iterations = cfg.iterations > 0 ? cfg.iterations : 10 * cfg.k;

  std::mt19937_64 rng(mix_seed(cfg.seed));

  // Seeding sample: enough frames to make k-means++ meaningful without
  // scanning the whole corpus.
  const std::size_t sample_size =
      std::min(frames.size(), std::max<std::size_t>(batch, 10 * k));
  std::vector<std::vector<float>> sample;
  sample.reserve(sample_size);
  {
    std::uniform_int_distribution<std::size_t> pick(0, frames.size() - 1);
    std::unordered_set<std::size_t> used;
    while (sample.size() < sample_size) {
      std::size_t i = pick(rng);
      if (used.insert(i).second) sample.push_back(frames[i]);
    }
  }

  Codebook cb;
  cb.seed = cfg.seed;
  cb.centroids = kmeans_pp_init(sample, k, rng);
  cb.counts.assign(k, 0);

  std::uniform_int_distribution<std::size_t> pick(0, frames.size() - 1);
  std::vector<std::size_t> batch_idx(batch);
  std::vector<std::size_t> assign(batch);
  for (int it = 0; it < iterations; ++it) {
    for (auto& b : batch_idx) b = pick(rng);
    for (std::size_t i = 0; i < batch; ++i)
      assign[i] = nearest_centroid(cb.centroids, frames[batch_idx[i]]);
    // Sculley update: per-centroid learning rate 1/count turns each centroid
    // into a running mean of its assigned frames.
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t c = assign[i];
      const auto& x = frames[batch_idx[i]];
      cb.counts[c] += 1;
      const float eta = 1.0f / static_cast<float>(cb.counts[c]);
      auto& ctr = cb.centroids[c];
      for (std::size_t d = 0; d < ctr.size(); ++d)
        ctr[d] += eta * (x[d] - ctr[d]);
    }
    // Centroids that have never been assigned move to random batch frames.
    for (std::size_t c = 0; c < k; ++c) {
      if (cb.counts[c] == 0) {
        std::uniform_int_distribution<std::size_t> bpick(0, batch - 1);
        cb.centroids[c] = frames[batch_idx[bpick(rng)]];
      }
    }
  }
  return cb;
}

UnitSequence quantize(const Codebook& cb, const FeatureSequence& feats) {
  if (feats.num_frames() > 0 && feats.dim() != cb.dim())
    throw DataError("quantize: feature dimension mismatch");
  UnitSequence u;
  u.ids.reserve(feats.num_frames());
  for (const auto& f : feats.frames)
    u.ids.push_back(static_cast<int>(nearest_centroid(cb.centroids, f)));
  return u;
}

UnitSequence dedup_runs(const UnitSequence& u) {
  UnitSequence out;
  std::size_t i = 0;
  while (i < u.ids.size()) {
    std::size_t j = i;
    while (j + 1 < u.ids.size() && u.ids[j + 1] == u.ids[i]) ++j;
    out.ids.push_back(u.ids[i]);
    out.run_lengths.push_back(static_cast<int>(j - i + 1));
    i = j + 1;
  }
  return out;
}

UnitSequence expand_runs(const UnitSequence& u) {
  if (u.run_lengths.size() != u.ids.size())
    throw DataError("expand_runs: missing run lengths");
  UnitSequence out;
  for (std::size_t i = 0; i < u.ids.size(); ++i) {
    if (u.run_lengths[i] <= 0)
      throw DataError("expand_runs: run lengths must be positive");
    for (int r = 0; r < u.run_lengths[i]; ++r) out.ids.push_back(u.ids[i]);
  }
  return out;
}

double inertia(const Codebook& cb,
               const std::vector<std::vector<float>>& frames) {
  double acc = 0.0;
  for (const auto& f : frames) {
    if (f.size() != cb.dim()) throw DataError("inertia: dimension mismatch");
    acc += sq_dist(cb.centroids[nearest_centroid(cb.centroids, f)], f);
  }
  return acc;
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw DataError("truncated file: " + path);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  write_u32(os, static_cast<std::uint32_t>(v & 0xffffffffull));
  write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

std::uint64_t read_u64(std::istream& is, const std::string& path) {
  std::uint64_t lo = read_u32(is, path);
  std::uint64_t hi = read_u32(is, path);
  return lo | (hi << 32);
}

}  // namespace

void save_features(const FeatureSequence& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("features: cannot open for write: " + path);
  os.write("LKBF", 4);
  write_u32(os, static_cast<std::uint32_t>(f.num_frames()));
  write_u32(os, static_cast<std::uint32_t>(f.dim()));
  for (const auto& row : f.frames)
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(float)));
  if (!os) throw DataError("features: write failed: " + path);
}

FeatureSequence load_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("features: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "LKBF", 4) != 0)
    throw DataError("features: bad magic in " + path);
  const std::uint32_t t = read_u32(is, path);
  const std::uint32_t d = read_u32(is, path);
  FeatureSequence f;
  f.source = FeatureSource::kExternalFile;
  f.frames.assign(t, std::vector<float>(d));
  for (auto& row : f.frames) {
    is.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!is) throw DataError("features: truncated file: " + path);
  return f;
}

void save_codebook(const Codebook& cb, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("codebook: cannot open for write: " + path);
  os.write("LKBC", 4);
  write_u32(os, static_cast<std::uint32_t>(cb.k()));
  write_u32(os, static_cast<std::uint32_t>(cb.dim()));
  for (const auto& row : cb.centroids)
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(float)));
  for (std::uint64_t c : cb.counts) write_u64(os, c);
  if (!os) throw DataError("codebook: write failed: " + path);
}

Codebook load_codebook(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("codebook: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "LKBC", 4) != 0)
    throw DataError("codebook: bad magic in " + path);
  const std::uint32_t k = read_u32(is, path);
  const std::uint32_t d = read_u32(is, path);
  Codebook cb;
  cb.centroids.assign(k, std::vector<float>(d));
  for (auto& row : cb.centroids) {
    is.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  cb.counts.resize(k);
  for (auto& c : cb.counts) c = read_u64(is, path);
  if (!is) throw DataError("codebook: truncated file: " + path);
  return cb;
}

}  // namespace voicelike
