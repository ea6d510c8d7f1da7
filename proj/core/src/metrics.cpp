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

#include "voicelike/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "voicelike/common.hpp"

namespace voicelike {

double mean_of(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean: empty input");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double population_std(std::span<const double> v) {
  double mu = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double mse(std::span<const double> p, std::span<const double> t) {
  if (p.size() != t.size() || p.empty())
    throw std::invalid_argument("mse: length mismatch or empty");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    acc += (p[i] - t[i]) * (p[i] - t[i]);
  return acc / static_cast<double>(p.size());
}

double pearson_lcc(std::span<const double> p, std::span<const double> t) {
  if (p.size() != t.size() || p.size() < 2)
    throw std::invalid_argument("lcc: need equal lengths >= 2");
  const double mp = mean_of(p), mt = mean_of(t);
  double spt = 0.0, spp = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dp = p[i] - mp, dt = t[i] - mt;
    spt += dp * dt;
    spp += dp * dp;
    stt += dt * dt;
  }
  if (spp == 0.0 || stt == 0.0)
    throw std::invalid_argument("lcc: zero variance");
  return spt / std::sqrt(spp * stt);
}

std::vector<double> fractional_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    // positions i..j (0-based) share the average 1-based rank
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman_srcc(std::span<const double> p, std::span<const double> t) {
  if (p.size() != t.size() || p.size() < 2)
    throw std::invalid_argument("srcc: need equal lengths >= 2");
  const auto rp = fractional_ranks(p);
  const auto rt = fractional_ranks(t);
  return pearson_lcc(rp, rt);
}

double kendall_tau(std::span<const double> p, std::span<const double> t) {
  if (p.size() != t.size() || p.size() < 2)
    throw std::invalid_argument("ktau: need equal lengths >= 2");
  const std::size_t n = p.size();
  long long concordant = 0, discordant = 0;
  long long ties_p = 0, ties_t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dp = p[i] - p[j];
      const double dt = t[i] - t[j];
      if (dp == 0.0 && dt == 0.0) {
        ++ties_p;
        ++ties_t;
      } else if (dp == 0.0) {
        ++ties_p;
      } else if (dt == 0.0) {
        ++ties_t;
      } else if ((dp > 0.0) == (dt > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const long long n0 = static_cast<long long>(n) * (n - 1) / 2;
  const double denom = std::sqrt(static_cast<double>(n0 - ties_p)) *
                       std::sqrt(static_cast<double>(n0 - ties_t));
  if (denom == 0.0) throw std::invalid_argument("ktau: all pairs tied");
  return static_cast<double>(concordant - discordant) / denom;
}

AccuracyF1 accuracy_f1(const std::vector<bool>& pred,
                       const std::vector<bool>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("accuracy_f1: length mismatch or empty");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && truth[i]) ++tp;
    else if (pred[i] && !truth[i]) ++fp;
    else if (!pred[i] && truth[i]) ++fn;
    else ++tn;
  }
  AccuracyF1 out;
  out.accuracy = static_cast<double>(tp + tn) / static_cast<double>(pred.size());
  const double denom = 2.0 * static_cast<double>(tp) + static_cast<double>(fp) +
                       static_cast<double>(fn);
  out.f1 = denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  return out;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("cosine: length mismatch or empty");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("cosine: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

EerResult compute_eer(const VerificationTrials& trials) {
  const auto& gen = trials.genuine_scores;
  const auto& imp = trials.impostor_scores;
  if (gen.empty() || imp.empty())
    throw std::invalid_argument("eer: both trial sides must be non-empty");

  std::vector<double> candidates;
  candidates.reserve(gen.size() + imp.size());
  candidates.insert(candidates.end(), gen.begin(), gen.end());
  candidates.insert(candidates.end(), imp.begin(), imp.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  auto far_at = [&](double t) {
    std::size_t c = 0;
    for (double s : imp)
      if (s >= t) ++c;
    return static_cast<double>(c) / static_cast<double>(imp.size());
  };
  auto frr_at = [&](double t) {
    std::size_t c = 0;
    for (double s : gen)
      if (s < t) ++c;
    return static_cast<double>(c) / static_cast<double>(gen.size());
  };

  std::size_t best = 0;
  double best_gap = 2.0;
  std::vector<double> fars(candidates.size()), frrs(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    fars[i] = far_at(candidates[i]);
    frrs[i] = frr_at(candidates[i]);
    const double gap = std::fabs(fars[i] - frrs[i]);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }

  EerResult res;
  res.far = fars[best];
  res.frr = frrs[best];
  res.eer = (fars[best] + frrs[best]) / 2.0;

  // FAR - FRR is non-increasing in t; the operating threshold is the midpoint
  // of the interval where it crosses zero (discrete score sets rarely cross
  // exactly).
  res.threshold = candidates.back();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (fars[i] - frrs[i] <= 0.0) {
      res.threshold = i == 0 ? candidates[0]
                             : (candidates[i - 1] + candidates[i]) / 2.0;
      break;
    }
  }
  return res;
}

std::vector<char32_t> utf8_decode(const std::string& s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6 && i + 1 < s.size()) {
      cp = static_cast<char32_t>((c & 0x1F) << 6 |
                                 (static_cast<unsigned char>(s[i + 1]) & 0x3F));
      len = 2;
    } else if ((c >> 4) == 0xE && i + 2 < s.size()) {
      cp = static_cast<char32_t>(
          (c & 0x0F) << 12 |
          (static_cast<unsigned char>(s[i + 1]) & 0x3F) << 6 |
          (static_cast<unsigned char>(s[i + 2]) & 0x3F));
      len = 3;
    } else if ((c >> 3) == 0x1E && i + 3 < s.size()) {
      cp = static_cast<char32_t>(
          (c & 0x07) << 18 |
          (static_cast<unsigned char>(s[i + 1]) & 0x3F) << 12 |
          (static_cast<unsigned char>(s[i + 2]) & 0x3F) << 6 |
          (static_cast<unsigned char>(s[i + 3]) & 0x3F));
      len = 4;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

double cer(const std::string& reference, const std::string& hypothesis) {
  const auto ref = utf8_decode(reference);
  const auto hyp = utf8_decode(hypothesis);
  if (ref.empty()) throw std::invalid_argument("cer: empty reference");
  return static_cast<double>(edit_distance(ref, hyp)) /
         static_cast<double>(ref.size());
}

double cer_units(const std::vector<int>& reference,
                 const std::vector<int>& hypothesis) {
  if (reference.empty()) throw std::invalid_argument("cer: empty reference");
  return static_cast<double>(edit_distance(reference, hypothesis)) /
         static_cast<double>(reference.size());
}

}  // namespace voicelike
