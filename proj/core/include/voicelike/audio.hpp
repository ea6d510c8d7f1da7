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

#ifndef VOICELIKE_AUDIO_HPP_
#define VOICELIKE_AUDIO_HPP_

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace voicelike {

// Sampled audio. Channels have equal length; samples are float32 nominally in
// [-1, 1].
struct Waveform {
  std::vector<std::vector<float>> channels;
  int sample_rate = 0;

  static Waveform mono(std::vector<float> samples, int rate) {
    Waveform w;
    w.channels.push_back(std::move(samples));
    w.sample_rate = rate;
    return w;
  }

  std::size_t length() const {
    return channels.empty() ? 0 : channels[0].size();
  }
  int channel_count() const { return static_cast<int>(channels.size()); }
  bool is_mono() const { return channels.size() == 1; }
  std::vector<float>& samples() { return channels.at(0); }
  const std::vector<float>& samples() const { return channels.at(0); }
};

// Log-Mel front-end parameters. Frames are taken fully inside the signal (no
// center padding), so the frame count is exactly 1 + floor((len - win) / hop).
struct MelConfig {
  int n_mels = 80;
  float f_min = 0.0f;
  float f_max = 8000.0f;
  int hop = 256;
  int win = 1024;
  int fft_size = 1024;
  float log_floor = 1e-10f;
};

struct MelSpectrogram {
  // T x n_mels, natural log of mel-filtered power, floored at log_floor.
  std::vector<std::vector<float>> frames;
  MelConfig config;
  int sample_rate = 0;

  std::size_t num_frames() const { return frames.size(); }
  std::size_t num_bins() const { return frames.empty() ? 0 : frames[0].size(); }
};

// RIFF/WAVE reader. Accepts PCM 16-bit and IEEE float32 (plus the
// WAVE_FORMAT_EXTENSIBLE wrappers of either). 16-bit samples are scaled by
// 1/32768.
Waveform load_wav(const std::string& path);

// PCM 16-bit writer; input clamped to [-1, 1].
void save_wav_pcm16(const Waveform& w, const std::string& path);

// Channel mean. Idempotent on mono input.
Waveform to_mono(const Waveform& w);

// Windowed-sinc (Kaiser) polyphase resampling of a mono waveform. Output
// length is round(len * target_rate / source_rate); the low-pass cutoff sits
// at the smaller Nyquist frequency.
Waveform resample(const Waveform& w, int target_rate);

// Hann window -> magnitude-squared FFT -> HTK-scale unit-peak triangular mel
// filters -> natural log with floor. Requires mono input at least one window
// long.
MelSpectrogram log_mel_spectrogram(const Waveform& w, const MelConfig& cfg);

std::size_t mel_frame_count(std::size_t samples, const MelConfig& cfg);

// Mel filterbank used by both analysis and the Griffin-Lim pseudo-inverse:
// n_mels rows of fft_size/2+1 weights, triangles equally spaced on the HTK
// mel scale 2595*log10(1 + f/700), peak 1.
std::vector<std::vector<float>> mel_filterbank(const MelConfig& cfg,
                                               int sample_rate);

float hz_to_mel(float hz);
float mel_to_hz(float mel);

// STFT/ISTFT with the same no-padding frame convention as the mel front end.
// Rows are frames of fft_size/2+1 complex bins.
std::vector<std::vector<std::complex<double>>> stft(
    const std::vector<float>& samples, int win, int hop, int fft_size);
std::vector<float> istft(
    const std::vector<std::vector<std::complex<double>>>& frames, int win,
    int hop, int fft_size, std::size_t length);

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& x, bool inverse);

}  // namespace voicelike

#endif  // VOICELIKE_AUDIO_HPP_
