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

#include "voicelike/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "voicelike/common.hpp"

namespace voicelike {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

std::uint32_t le_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

// Zeroth-order modified Bessel function, power series. Converges quickly for
// the Kaiser betas used here.
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  double half_x = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half_x / k) * (half_x / k);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

}  // namespace

Waveform load_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("wav: cannot open: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw DataError("wav: malformed RIFF/WAVE header: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data_ptr = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    std::uint32_t chunk_len = le_u32(hdr + 4);
    std::size_t body = pos + 8;
    if (body + chunk_len > bytes.size())
      throw DataError("wav: truncated chunk: " + path);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw DataError("wav: short fmt chunk: " + path);
      const unsigned char* f = bytes.data() + body;
      format = le_u16(f);
      channels = le_u16(f + 2);
      rate = le_u32(f + 4);
      bits = le_u16(f + 14);
      if (format == 0xFFFE) {
        // WAVE_FORMAT_EXTENSIBLE: the real format tag leads the SubFormat
        // GUID at offset 24 of the chunk body.
        if (chunk_len < 40)
          throw DataError("wav: short extensible fmt chunk: " + path);
        format = le_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_ptr = bytes.data() + body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw DataError("wav: missing fmt chunk: " + path);
  if (!data_ptr) throw DataError("wav: missing data chunk: " + path);
  if (data_len == 0) throw DataError("wav: zero-length data chunk: " + path);
  if (channels == 0 || rate == 0)
    throw DataError("wav: malformed fmt fields: " + path);

  bool pcm16 = format == 1 && bits == 16;
  bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw DataError("wav: unsupported encoding (expect PCM16 or float32): " +
                    path);

  std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  std::size_t frame_bytes = bytes_per_sample * channels;
  std::size_t n_frames = data_len / frame_bytes;
  if (n_frames == 0) throw DataError("wav: zero-length data chunk: " + path);

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.channels.assign(channels, std::vector<float>(n_frames));
  for (std::size_t i = 0; i < n_frames; ++i) {
    const unsigned char* fp = data_ptr + i * frame_bytes;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* sp = fp + c * bytes_per_sample;
      if (pcm16) {
        std::int16_t s = static_cast<std::int16_t>(le_u16(sp));
        w.channels[c][i] = static_cast<float>(s) / 32768.0f;
      } else {
        float v;
        std::memcpy(&v, sp, 4);
        w.channels[c][i] = v;
      }
    }
  }
  return w;
}

void save_wav_pcm16(const Waveform& w, const std::string& path) {
  if (w.channels.empty() || w.length() == 0)
    throw DataError("wav: refusing to write empty waveform: " + path);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("wav: cannot open for write: " + path);
  std::uint16_t channels = static_cast<std::uint16_t>(w.channel_count());
  std::uint32_t rate = static_cast<std::uint32_t>(w.sample_rate);
  std::uint32_t n = static_cast<std::uint32_t>(w.length());
  std::uint32_t data_len = n * channels * 2;
  std::uint32_t byte_rate = rate * channels * 2;
  std::uint16_t block_align = channels * 2;

  auto u16 = [&](std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<char*>(b), 2);
  };
  auto u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<char*>(b), 4);
  };

  os.write("RIFF", 4);
  u32(36 + data_len);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  u32(16);
  u16(1);  // PCM
  u16(channels);
  u32(rate);
  u32(byte_rate);
  u16(block_align);
  u16(16);
  os.write("data", 4);
  u32(data_len);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      float v = std::clamp(w.channels[c][i], -1.0f, 1.0f);
      long s = std::lround(static_cast<double>(v) * 32768.0);
      s = std::clamp(s, -32768L, 32767L);
      u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(s)));
    }
  }
  if (!os) throw DataError("wav: write failed: " + path);
}

Waveform to_mono(const Waveform& w) {
  if (w.channels.empty()) throw DataError("to_mono: empty waveform");
  if (w.is_mono()) return w;
  std::size_t n = w.length();
  std::vector<float> out(n, 0.0f);
  float inv = 1.0f / static_cast<float>(w.channel_count());
  for (const auto& ch : w.channels) {
    for (std::size_t i = 0; i < n; ++i) out[i] += ch[i];
  }
  for (auto& v : out) v *= inv;
  return Waveform::mono(std::move(out), w.sample_rate);
}

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw DataError("resample: target rate must be > 0");
  if (!w.is_mono()) throw DataError("resample: input must be mono");
  if (target_rate == w.sample_rate) {
    Waveform copy = w;
    return copy;
  }
  const auto& x = w.samples();
  const double ratio =
      static_cast<double>(target_rate) / static_cast<double>(w.sample_rate);
  const std::size_t out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) * ratio));
  // Cutoff at the smaller Nyquist, in cycles per source sample.
  const double fc = 0.5 * std::min(1.0, ratio) * 0.97;
  const int zero_crossings = 16;
  const double half_width = zero_crossings / (2.0 * fc);
  const double beta = 8.6;
  const double i0_beta = bessel_i0(beta);

  std::vector<float> y(out_len, 0.0f);
  for (std::size_t n = 0; n < out_len; ++n) {
    const double t = static_cast<double>(n) / ratio;  // source index
    const long k_lo = static_cast<long>(std::ceil(t - half_width));
    const long k_hi = static_cast<long>(std::floor(t + half_width));
    double acc = 0.0, norm = 0.0;
    for (long k = std::max(k_lo, 0L);
         k <= std::min(k_hi, static_cast<long>(x.size()) - 1); ++k) {
      const double d = static_cast<double>(k) - t;
      double sinc = std::abs(d) < 1e-12
                        ? 2.0 * fc
                        : std::sin(2.0 * kPi * fc * d) / (kPi * d);
      const double u = d / half_width;
      const double win = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - u * u))) /
                         i0_beta;
      const double h = sinc * win;
      acc += h * static_cast<double>(x[static_cast<std::size_t>(k)]);
      norm += h;
    }
    // Normalizing by the kernel sum keeps unity gain at every phase.
    y[n] = norm != 0.0 ? static_cast<float>(acc / norm) : 0.0f;
  }
  return Waveform::mono(std::move(y), target_rate);
}

void fft_inplace(std::vector<std::complex<double>>& x, bool inverse) {
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft: size must be a power of two");
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / static_cast<double>(len) *
                       (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        auto u = x[i + j];
        auto v = x[i + j + len / 2] * w;
        x[i + j] = u + v;
        x[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& v : x) v /= static_cast<double>(n);
  }
}

namespace {

std::vector<double> hann_window(int win) {
  // Periodic Hann.
  std::vector<double> w(static_cast<std::size_t>(win));
  for (int i = 0; i < win; ++i)
    w[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * kPi * i / static_cast<double>(win));
  return w;
}

}  // namespace

std::vector<std::vector<std::complex<double>>> stft(
    const std::vector<float>& samples, int win, int hop, int fft_size) {
  if (hop <= 0 || win <= 0 || win > fft_size)
    throw std::invalid_argument("stft: need 0 < hop, 0 < win <= fft_size");
  if (!is_power_of_two(fft_size))
    throw std::invalid_argument("stft: fft_size must be a power of two");
  if (samples.size() < static_cast<std::size_t>(win))
    throw DataError("stft: signal shorter than one window");
  const std::size_t t_frames =
      1 + (samples.size() - static_cast<std::size_t>(win)) /
              static_cast<std::size_t>(hop);
  const std::vector<double> window = hann_window(win);
  const std::size_t n_bins = static_cast<std::size_t>(fft_size) / 2 + 1;
  std::vector<std::vector<std::complex<double>>> out(
      t_frames, std::vector<std::complex<double>>(n_bins));
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(fft_size));
  for (std::size_t t = 0; t < t_frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(hop);
    for (int i = 0; i < fft_size; ++i) {
      double v = i < win ? static_cast<double>(samples[start + i]) *
                               window[static_cast<std::size_t>(i)]
                         : 0.0;
      buf[static_cast<std::size_t>(i)] = {v, 0.0};
    }
    fft_inplace(buf, false);
    for (std::size_t b = 0; b < n_bins; ++b) out[t][b] = buf[b];
  }
  return out;
}

std::vector<float> istft(
    const std::vector<std::vector<std::complex<double>>>& frames, int win,
    int hop, int fft_size, std::size_t length) {
  if (frames.empty()) throw std::invalid_argument("istft: no frames");
  const std::size_t n_bins = static_cast<std::size_t>(fft_size) / 2 + 1;
  const std::vector<double> window = hann_window(win);
  std::vector<double> acc(length, 0.0), wsum(length, 0.0);
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(fft_size));
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != n_bins)
      throw std::invalid_argument("istft: bin count mismatch");
    for (std::size_t b = 0; b < n_bins; ++b) buf[b] = frames[t][b];
    // Hermitian completion for a real signal.
    for (std::size_t b = n_bins; b < static_cast<std::size_t>(fft_size); ++b)
      buf[b] = std::conj(buf[static_cast<std::size_t>(fft_size) - b]);
    fft_inplace(buf, true);
    const std::size_t start = t * static_cast<std::size_t>(hop);
    for (int i = 0; i < win; ++i) {
      std::size_t pos = start + static_cast<std::size_t>(i);
      if (pos >= length) break;
      double wv = window[static_cast<std::size_t>(i)];
      acc[pos] += buf[static_cast<std::size_t>(i)].real() * wv;
      wsum[pos] += wv * wv;
    }
  }
  // Window-square OLA normalization, with the denominator floored relative
  // to its peak so the thin window tails at the signal edges cannot blow up.
  double wmax = 0.0;
  for (double v : wsum) wmax = std::max(wmax, v);
  const double wfloor = std::max(1e-3 * wmax, 1e-12);
  std::vector<float> out(length, 0.0f);
  for (std::size_t i = 0; i < length; ++i)
    out[i] = wsum[i] > 0.0
                 ? static_cast<float>(acc[i] / std::max(wsum[i], wfloor))
                 : 0.0f;
  return out;
}

float hz_to_mel(float hz) {
  return 2595.0f * std::log10(1.0f + hz / 700.0f);
}

float mel_to_hz(float mel) {
  return 700.0f * (std::pow(10.0f, mel / 2595.0f) - 1.0f);
}

std::vector<std::vector<float>> mel_filterbank(const MelConfig& cfg,
                                               int sample_rate) {
  if (!(cfg.f_min < cfg.f_max))
    throw std::invalid_argument("mel: need f_min < f_max");
  if (cfg.f_max > static_cast<float>(sample_rate) / 2.0f)
    throw std::invalid_argument("mel: f_max above Nyquist");
  if (cfg.n_mels < 1) throw std::invalid_argument("mel: n_mels must be >= 1");
  const std::size_t n_bins = static_cast<std::size_t>(cfg.fft_size) / 2 + 1;
  const float m_lo = hz_to_mel(cfg.f_min);
  const float m_hi = hz_to_mel(cfg.f_max);
  std::vector<float> edges(static_cast<std::size_t>(cfg.n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<float>(i) /
                                    static_cast<float>(cfg.n_mels + 1));
  std::vector<std::vector<float>> fb(
      static_cast<std::size_t>(cfg.n_mels), std::vector<float>(n_bins, 0.0f));
  const float bin_hz =
      static_cast<float>(sample_rate) / static_cast<float>(cfg.fft_size);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const float lo = edges[static_cast<std::size_t>(m)];
    const float ctr = edges[static_cast<std::size_t>(m) + 1];
    const float hi = edges[static_cast<std::size_t>(m) + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const float f = bin_hz * static_cast<float>(k);
      float wgt = 0.0f;
      if (f > lo && f < ctr) {
        wgt = (f - lo) / (ctr - lo);
      } else if (f == ctr) {
        wgt = 1.0f;
      } else if (f > ctr && f < hi) {
        wgt = (hi - f) / (hi - ctr);
      }
      fb[static_cast<std::size_t>(m)][k] = wgt;
    }
  }
  return fb;
}

std::size_t mel_frame_count(std::size_t samples, const MelConfig& cfg) {
  if (samples < static_cast<std::size_t>(cfg.win)) return 0;
  return 1 + (samples - static_cast<std::size_t>(cfg.win)) /
                 static_cast<std::size_t>(cfg.hop);
}

MelSpectrogram log_mel_spectrogram(const Waveform& w, const MelConfig& cfg) {
  if (!w.is_mono()) throw DataError("mel: input must be mono");
  if (cfg.hop > cfg.win || cfg.win > cfg.fft_size)
    throw std::invalid_argument("mel: need hop <= win <= fft_size");
  if (w.length() < static_cast<std::size_t>(cfg.win))
    throw DataError("mel: signal shorter than one window");
  const auto spec = stft(w.samples(), cfg.win, cfg.hop, cfg.fft_size);
  const auto fb = mel_filterbank(cfg, w.sample_rate);
  const std::size_t n_bins = static_cast<std::size_t>(cfg.fft_size) / 2 + 1;
  MelSpectrogram mel;
  mel.config = cfg;
  mel.sample_rate = w.sample_rate;
  mel.frames.assign(spec.size(),
                    std::vector<float>(static_cast<std::size_t>(cfg.n_mels)));
  std::vector<double> power(n_bins);
  for (std::size_t t = 0; t < spec.size(); ++t) {
    for (std::size_t b = 0; b < n_bins; ++b) power[b] = std::norm(spec[t][b]);
    for (int m = 0; m < cfg.n_mels; ++m) {
      const auto& row = fb[static_cast<std::size_t>(m)];
      double acc = 0.0;
      for (std::size_t b = 0; b < n_bins; ++b) acc += row[b] * power[b];
      mel.frames[t][static_cast<std::size_t>(m)] = static_cast<float>(
          std::log(std::max(acc, static_cast<double>(cfg.log_floor))));
    }
  }
  return mel;
}

}  // namespace voicelike
