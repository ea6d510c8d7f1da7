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

#include "voicelike/augment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "voicelike/common.hpp"

namespace voicelike {

void AugmentConfig::validate() const {
  auto prob_ok = [](float p) { return p >= 0.0f && p <= 1.0f; };
  if (!prob_ok(reverb_prob) || !prob_ok(noise_prob) || !prob_ok(reverse_prob) ||
      !prob_ok(pad_prob))
    throw ConfigError("augment: probabilities must lie in [0,1]");
  if (snr_db_min > snr_db_max)
    throw ConfigError("augment: snr_db_min must be <= snr_db_max");
  if (max_pad_sec < 0.0f)
    throw ConfigError("augment: max_pad_sec must be >= 0");
}

AugmentPlan plan_augment(const AugmentConfig& cfg, int sample_rate,
                         std::size_t n_irs, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(mix_seed(seed));
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  AugmentPlan plan;

  // All draws happen unconditionally so the plan layout is stable.
  float u_pad = unit(rng);
  std::size_t max_pad = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.max_pad_sec) * sample_rate));
  std::uniform_int_distribution<std::size_t> pad_dist(0, max_pad);
  plan.pad_pre = pad_dist(rng);
  plan.pad_post = pad_dist(rng);
  plan.do_pad = u_pad < cfg.pad_prob;

  float u_reverb = unit(rng);
  std::uniform_int_distribution<std::size_t> ir_dist(
      0, n_irs > 0 ? n_irs - 1 : 0);
  plan.ir_index = ir_dist(rng);
  plan.do_reverb = n_irs > 0 && u_reverb < cfg.reverb_prob;

  float u_noise = unit(rng);
  std::uniform_real_distribution<float> snr_dist(cfg.snr_db_min,
                                                 cfg.snr_db_max);
  plan.snr_db = snr_dist(rng);
  plan.noise_seed = rng();
  plan.do_noise = u_noise < cfg.noise_prob;

  float u_reverse = unit(rng);
  plan.do_reverse = u_reverse < cfg.reverse_prob;
  return plan;
}

Waveform pad_silence(const Waveform& w, std::size_t pre_samples,
                     std::size_t post_samples) {
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.channels.reserve(w.channels.size());
  for (const auto& ch : w.channels) {
    std::vector<float> padded(pre_samples + ch.size() + post_samples, 0.0f);
    std::copy(ch.begin(), ch.end(), padded.begin() + static_cast<long>(pre_samples));
    out.channels.push_back(std::move(padded));
  }
  return out;
}

Waveform add_white_noise(const Waveform& w, float snr_db, std::uint64_t seed) {
  if (!w.is_mono()) throw DataError("noise: input must be mono");
  const auto& x = w.samples();
  double p_signal = 0.0;
  for (float v : x) p_signal += static_cast<double>(v) * v;
  p_signal /= std::max<std::size_t>(x.size(), 1);
  if (p_signal <= 0.0)
    throw DataError("noise: SNR undefined for an all-zero signal");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(x.size());
  double p_noise = 0.0;
  for (auto& v : noise) {
    v = gauss(rng);
    p_noise += v * v;
  }
  p_noise /= std::max<std::size_t>(noise.size(), 1);
  const double target = p_signal / std::pow(10.0, snr_db / 10.0);
  const double gain = p_noise > 0.0 ? std::sqrt(target / p_noise) : 0.0;

  std::vector<float> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = x[i] + static_cast<float>(gain * noise[i]);
  return Waveform::mono(std::move(y), w.sample_rate);
}

std::vector<float> convolve_truncated(const std::vector<float>& x,
                                      const std::vector<float>& ir) {
  if (ir.empty()) throw DataError("reverb: empty impulse response");
  std::vector<double> acc(x.size(), 0.0);
  for (std::size_t j = 0; j < ir.size(); ++j) {
    const double h = ir[j];
    if (h == 0.0) continue;
    const std::size_t limit = x.size() > j ? x.size() - j : 0;
    for (std::size_t i = 0; i < limit; ++i) acc[i + j] += h * x[i];
  }
  std::vector<float> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<float>(acc[i]);
  return y;
}

Waveform convolve_reverb(const Waveform& w, const ImpulseResponse& ir) {
  if (!w.is_mono()) throw DataError("reverb: input must be mono");
  if (ir.channels.empty() || ir.length() == 0)
    throw DataError("reverb: empty impulse response");
  ImpulseResponse matched = to_mono(ir);
  if (matched.sample_rate != w.sample_rate)
    matched = resample(matched, w.sample_rate);

  std::vector<float> y = convolve_truncated(w.samples(), matched.samples());
  float in_peak = 0.0f, out_peak = 0.0f;
  for (float v : w.samples()) in_peak = std::max(in_peak, std::abs(v));
  for (float v : y) out_peak = std::max(out_peak, std::abs(v));
  if (out_peak > 0.0f && in_peak > 0.0f) {
    const float g = in_peak / out_peak;
    for (auto& v : y) v *= g;
  }
  return Waveform::mono(std::move(y), w.sample_rate);
}

Waveform time_reverse(const Waveform& w) {
  if (!w.is_mono()) throw DataError("reverse: input must be mono");
  std::vector<float> y(w.samples().rbegin(), w.samples().rend());
  return Waveform::mono(std::move(y), w.sample_rate);
}

Waveform augment_chain(const Waveform& w, const AugmentConfig& cfg,
                       const std::vector<ImpulseResponse>& irs,
                       std::uint64_t seed) {
  const AugmentPlan plan = plan_augment(cfg, w.sample_rate, irs.size(), seed);
  Waveform out = w;
  if (plan.do_pad) out = pad_silence(out, plan.pad_pre, plan.pad_post);
  if (plan.do_reverb) out = convolve_reverb(out, irs[plan.ir_index]);
  if (plan.do_noise) out = add_white_noise(out, plan.snr_db, plan.noise_seed);
  if (plan.do_reverse) out = time_reverse(out);
  return out;
}

std::vector<ImpulseResponse> load_impulse_responses(const std::string& dir) {
  std::vector<ImpulseResponse> irs;
  if (dir.empty()) return irs;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return irs;
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) irs.push_back(to_mono(load_wav(p.string())));
  return irs;
}

}  // namespace voicelike
