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

#ifndef VOICELIKE_CONVERTER_HPP_
#define VOICELIKE_CONVERTER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "voicelike/audio.hpp"
#include "voicelike/autodiff.hpp"
#include "voicelike/manifest.hpp"
#include "voicelike/nn.hpp"
#include "voicelike/predictor.hpp"
#include "voicelike/tensor.hpp"
#include "voicelike/units.hpp"

namespace voicelike {

// Fixed-dimensional speaker identity vector; externally extracted (192-dim by
// convention) or produced by the built-in mel-statistics fallback.
struct SpeakerEmbedding {
  std::vector<float> values;
};

// Embedding file ("LKBE"): magic, u32 D_s, float32 values.
void save_embedding(const SpeakerEmbedding& e, const std::string& path);
SpeakerEmbedding load_embedding(const std::string& path);

// [mean || std] of mel frames per bin (2 * n_mels dims). Lets the pipeline
// run without an external speaker encoder.
SpeakerEmbedding fallback_speaker_embedding(const MelSpectrogram& mel);

struct ConverterConfig {
  int vocab_k = 100;      // must match the codebook
  int embed_dim = 128;    // E
  int encoder_depth = 2;  // residual 1-D conv blocks, kernel 3
  int decoder_depth = 2;
  int mel_bins = 80;
  int duration_hidden = 64;
  int speaker_dim = 192;  // D_s
  std::uint64_t seed = 0;
};

struct ConditioningInput {
  UnitSequence units;  // deduped
  SpeakerEmbedding speaker;
  LikabilityRating target;
  float s = 1.0f;
};

// y = x + conv2(relu(conv1(x))), both convs kernel 3 with zero padding.
template <typename S>
struct ConvBlockT {
  TensorT<S> w1, b1, w2, b2;
};

template <typename S>
struct ConverterParamsT {
  TensorT<S> token_embedding;  // k x E
  TensorT<S> speaker_proj;     // D_s x E
  TensorT<S> rating_proj;      // 4 x E
  std::vector<ConvBlockT<S>> encoder;
  TensorT<S> dur_w1, dur_b1;  // E x H
  TensorT<S> dur_w2, dur_b2;  // H x 1
  std::vector<ConvBlockT<S>> decoder;
  TensorT<S> mel_w, mel_b;  // E x mel_bins

  std::vector<TensorT<S>*> all();
  std::vector<std::pair<std::string, TensorT<S>*>> named();
  template <typename U>
  ConverterParamsT<U> cast() const;
};

using ConverterParams = ConverterParamsT<float>;

struct ConverterModel {
  ConverterParams params;
  ConverterConfig config;
  MelConfig mel;
  int sample_rate = 22050;
  // Per-bin normalization of the mel targets; the decoder predicts in the
  // normalized domain.
  std::vector<float> mel_mean, mel_std;
};

ConverterModel build_converter(const ConverterConfig& cfg,
                               const MelConfig& mel = {},
                               int sample_rate = 22050);

// Records converter sub-graphs on a tape against one parameter set.
// Parameter binding, in all() order: external per-parameter grad sinks
// (training workers), the tensors' own grad buffers (gradient checks), or
// constants (inference).
template <typename S>
class ConverterGraph {
 public:
  using Var = typename Tape<S>::Var;

  ConverterGraph(Tape<S>& tape, ConverterParamsT<S>& params,
                 std::vector<std::vector<S>>* grad_sinks = nullptr,
                 bool own_grads = false);

  // Pre-encoder conditioning sum: token_emb[id_t] + proj_spk(speaker) +
  // s * proj_rate(target). The rating term enters purely multiplicatively in
  // s.
  Var preencoder(const std::vector<int>& ids, const TensorT<S>& speaker_row,
                 const TensorT<S>& rating_row, S s);
  Var encode(Var pre);
  // Per-token log-duration (T_tok x 1).
  Var log_durations(Var encoded);
  // Decoder blocks + linear mel head; output stays in the normalized domain.
  Var decode(Var frame_hidden);

  Tape<S>& tape() { return tape_; }

 private:
  Var conv_block(std::size_t base, Var x);

  Tape<S>& tape_;
  std::vector<Var> bound_;
  std::size_t enc_depth_, dec_depth_;
  std::size_t dur0_, dec0_, mel_w_, mel_b_;
};

// Pre-encoder conditioning sum as a plain tensor (for conditioning checks).
Tensor condition_preencoder(const ConverterModel& model,
                            const ConditioningInput& inp);

// Conditioning followed by the encoder blocks; one E-dim row per deduped
// token.
Tensor condition(const ConverterModel& model, const ConditioningInput& inp);

// round(exp(log_duration)) per token, clamped to >= 1.
std::vector<int> predict_durations(const ConverterModel& model,
                                   const Tensor& encoded_hidden);

// Token t's hidden row repeated durations[t] times.
Tensor length_regulate(const Tensor& hidden, const std::vector<int>& durations);

// Decoder on a frame-rate hidden sequence; output de-normalized and floored
// at ln(log_floor).
MelSpectrogram decode_mel(const ConverterModel& model,
                          const Tensor& frame_hidden);

// One training utterance: deduped units with run lengths, conditioning
// inputs, and the raw log-mel target aligned to sum(run_lengths) frames.
struct ConverterExample {
  std::string id;
  UnitSequence units;  // deduped, run lengths present
  SpeakerEmbedding speaker;
  LikabilityRating rating;
  Tensor mel_target;  // T x mel_bins
};

struct ConverterTrainConfig {
  int epochs = 50;
  int batch_size = 8;
  AdamConfig adam;
  float s_train = 1.0f;
  float duration_loss_weight = 1.0f;
  bool shuffle = true;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct ConverterTrainStats {
  std::vector<double> epoch_loss;   // mel + weighted duration loss
  double final_mel_mse = 0.0;       // normalized domain, teacher-forced
  double final_duration_mae = 0.0;  // |round(exp(pred)) - run_length| mean
};

// Teacher-forced training: mel MSE (normalized) + weighted log-duration MSE,
// s fixed at s_train. Computes the mel normalization stats from the examples
// on entry.
ConverterTrainStats train_converter(ConverterModel& model,
                                    const std::vector<ConverterExample>& data,
                                    const ConverterTrainConfig& cfg);

// Full conversion: quantize -> dedup -> condition(s) -> durations -> decode.
// forced_durations bypasses the duration head (teacher forcing).
MelSpectrogram convert(const ConverterModel& model, const FeatureSequence& feats,
                       const Codebook& cb, const SpeakerEmbedding& speaker,
                       const LikabilityRating& target, float s = 2.5f,
                       const std::vector<int>* forced_durations = nullptr);

// Mel inversion via the filterbank right pseudo-inverse followed by
// iterative phase reconstruction (zero initial phase, deterministic).
Waveform griffin_lim_vocoder(const MelSpectrogram& mel, int iterations = 60);

void save_converter(const ConverterModel& model, const std::string& path);
ConverterModel load_converter(const std::string& path);

// Per-record input loading shared by training, conversion and evaluation:
// features from the record's LKBF file or the internal mel path; speaker
// embedding from its LKBE file or the mel fallback.
struct UtteranceInputs {
  FeatureSequence feats;
  SpeakerEmbedding speaker;
  Tensor mel;  // raw log-mel (empty when the record has no audio)
};

UtteranceInputs load_utterance_inputs(const ManifestRecord& rec,
                                      const MelConfig& mel_cfg,
                                      int sample_rate,
                                      const std::string& base_dir);

// Builds teacher-forcing examples for one split of an annotated manifest.
// Ratings come from ratings_pred (fallback: ratings); mel targets are
// time-aligned to the feature frames.
std::vector<ConverterExample> prepare_converter_examples(
    const DatasetManifest& manifest, Split split, const Codebook& cb,
    const MelConfig& mel_cfg, int sample_rate, const std::string& base_dir);

}  // namespace voicelike

#endif  // VOICELIKE_CONVERTER_HPP_
