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

#ifndef VOICELIKE_METRICS_HPP_
#define VOICELIKE_METRICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace voicelike {

// Mean squared error; equal lengths >= 1.
double mse(std::span<const double> p, std::span<const double> t);

// Sample Pearson correlation; both sides need nonzero variance.
double pearson_lcc(std::span<const double> p, std::span<const double> t);

// Spearman rank correlation: Pearson over fractional ranks, ties get the
// average rank.
double spearman_srcc(std::span<const double> p, std::span<const double> t);

// Kendall tau-b (tie-corrected).
double kendall_tau(std::span<const double> p, std::span<const double> t);

// Average ranks in [1, n], ties averaged.
std::vector<double> fractional_ranks(std::span<const double> v);

// Population standard deviation (the convention used throughout reporting and
// calibration).
double population_std(std::span<const double> v);
double mean_of(std::span<const double> v);

struct AccuracyF1 {
  double accuracy = 0.0;
  double f1 = 0.0;
};

// Binary classification scores; `true` is the positive (liked) label. F1 is 0
// by convention when precision + recall is 0.
AccuracyF1 accuracy_f1(const std::vector<bool>& pred,
                       const std::vector<bool>& truth);

double cosine_similarity(std::span<const float> a, std::span<const float> b);

struct VerificationTrials {
  std::vector<double> genuine_scores;
  std::vector<double> impostor_scores;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  double far = 0.0;  // at the chosen candidate
  double frr = 0.0;
};

// Sweeps the union of scores as candidate thresholds with FAR = fraction of
// impostor scores >= t and FRR = fraction of genuine scores < t. Returns the
// candidate minimizing |FAR - FRR| (EER = midpoint of the two rates there) and
// the midpoint of the crossing interval as the operating threshold.
EerResult compute_eer(const VerificationTrials& trials);

// Unit-cost Levenshtein distance over arbitrary symbol sequences.
template <typename Symbol>
std::size_t edit_distance(const std::vector<Symbol>& ref,
                          const std::vector<Symbol>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Character error rate over Unicode scalar values of UTF-8 strings.
double cer(const std::string& reference, const std::string& hypothesis);

// Character error rate over unit-id sequences (symbols are the ids).
double cer_units(const std::vector<int>& reference,
                 const std::vector<int>& hypothesis);

// Decodes UTF-8 to Unicode scalar values; invalid bytes decode as U+FFFD.
std::vector<char32_t> utf8_decode(const std::string& s);

}  // namespace voicelike

#endif  // VOICELIKE_METRICS_HPP_
