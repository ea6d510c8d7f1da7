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

#ifndef VOICELIKE_PREDICTOR_HPP_
#define VOICELIKE_PREDICTOR_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "voicelike/audio.hpp"
#include "voicelike/augment.hpp"
#include "voicelike/autodiff.hpp"
#include "voicelike/manifest.hpp"
#include "voicelike/nn.hpp"
#include "voicelike/tensor.hpp"

namespace voicelike {

// Listener groups by gender and age, fixed order. The counts are corpus
// metadata (number of raters per group).
enum class ListenerGroup { kMaleUnder40 = 0, kMale40Plus, kFemaleUnder40, kFemale40Plus };

inline constexpr std::array<int, 4> kListenerCounts = {202, 323, 143, 210};
inline constexpr std::array<const char*, 4> kGroupNames = {
    "m_under40", "m_40plus", "f_under40", "f_40plus"};

// One rating per listener group. Human ratings lie in [-1, 1]; raw
// predictions may leave that range and are only clamped for display. Stored
// in double so the calibration contract holds to 1e-9.
struct LikabilityRating {
  std::array<double, 4> values{};

  double mean() const {
    return (values[0] + values[1] + values[2] + values[3]) / 4.0;
  }
  LikabilityRating clamped() const {
    LikabilityRating out = *this;
    for (auto& v : out.values) v = v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v);
    return out;
  }
};

// liked iff the mean of the four group values is >= threshold.
bool classify_liked(double rating_mean, double threshold = 0.0);

// Network parameters, sized per the five-layer TDNN regression architecture:
// frame1 240x32 (context {-2,0,+2}), frame2 160x32 ({-6,-3,0,+3,+6}),
// frame3 32x32, segment4 64x32 after stats pooling, segment5 32x4.
template <typename S>
struct PredictorParamsT {
  TensorT<S> frame1_w, frame1_b;
  TensorT<S> frame2_w, frame2_b;
  TensorT<S> frame3_w, frame3_b;
  TensorT<S> segment4_w, segment4_b;
  TensorT<S> segment5_w, segment5_b;

  std::vector<TensorT<S>*> all() {
    return {&frame1_w, &frame1_b, &frame2_w, &frame2_b, &frame3_w,
            &frame3_b, &segment4_w, &segment4_b, &segment5_w, &segment5_b};
  }
  std::vector<std::pair<std::string, TensorT<S>*>> named() {
    return {{"frame1/w", &frame1_w},     {"frame1/b", &frame1_b},
            {"frame2/w", &frame2_w},     {"frame2/b", &frame2_b},
            {"frame3/w", &frame3_w},     {"frame3/b", &frame3_b},
            {"segment4/w", &segment4_w}, {"segment4/b", &segment4_b},
            {"segment5/w", &segment5_w}, {"segment5/b", &segment5_b}};
  }
  template <typename U>
  PredictorParamsT<U> cast() const {
    PredictorParamsT<U> out;
    out.frame1_w = frame1_w.template cast<U>();
    out.frame1_b = frame1_b.template cast<U>();
    out.frame2_w = frame2_w.template cast<U>();
    out.frame2_b = frame2_b.template cast<U>();
    out.frame3_w = frame3_w.template cast<U>();
    out.frame3_b = frame3_b.template cast<U>();
    out.segment4_w = segment4_w.template cast<U>();
    out.segment4_b = segment4_b.template cast<U>();
    out.segment5_w = segment5_w.template cast<U>();
    out.segment5_b = segment5_b.template cast<U>();
    return out;
  }
};

using PredictorParams = PredictorParamsT<float>;

struct PredictorModel {
  PredictorParams params;
  MelConfig mel;
  int sample_rate = 22050;
  // Per-bin input normalization fitted on the training mels; empty means
  // identity. Part of the checkpoint.
  std::vector<float> input_mean;
  std::vector<float> input_std;
};

// Valid-frame TDNN contexts consume 4 + 12 frames, so inference needs at
// least 17 mel frames.
inline constexpr std::size_t kMinPredictorFrames = 17;

// Fresh model with seeded uniform fan-in init, biases zero.
PredictorModel build_model(std::uint64_t seed, const MelConfig& mel = {},
                           int sample_rate = 22050);

// Records the forward graph on the tape and returns the 1x4 output var.
// `binder` supplies the leaf vars for the ten parameter tensors in all()
// order.
template <typename S>
typename Tape<S>::Var predictor_forward(
    Tape<S>& tape, const std::vector<typename Tape<S>::Var>& bound_params,
    typename Tape<S>::Var mel_input);

// Binds parameters as constants (inference) in all() order.
template <typename S>
std::vector<typename Tape<S>::Var> bind_constants(Tape<S>& tape,
                                                  PredictorParamsT<S>& params);

Tensor mel_frames_tensor(const MelSpectrogram& mel);

// Forward pass on a mel spectrogram with T >= 17 frames.
LikabilityRating predict_raw(const PredictorModel& model,
                             const MelSpectrogram& mel);

// Post-filter statistics (target and prediction moments on the validation
// split; population standard deviation).
struct GroupCalibration {
  double mu = 0.0;
  double sigma = 1.0;
  double mu_hat = 0.0;
  double sigma_hat = 1.0;
};

struct CalibrationParams {
  std::array<GroupCalibration, 4> groups;
  GroupCalibration pooled;
};

CalibrationParams fit_calibration(const std::vector<LikabilityRating>& predictions,
                                  const std::vector<LikabilityRating>& targets);

// y' = (sigma / sigma_hat) * (y - mu_hat) + mu, per group.
LikabilityRating apply_calibration(const CalibrationParams& params,
                                   const LikabilityRating& y_hat);

void save_calibration(const CalibrationParams& params, const std::string& path);
CalibrationParams load_calibration(const std::string& path);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  float crop_seconds = 4.0f;  // random fixed-length crops; short clips padded
  int patience = 0;           // 0 disables early stopping
  bool augment_enabled = true;
  AugmentConfig augment;
  AdamConfig adam;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_srcc = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_srcc = 0.0;
};

// Minibatch MSE training over the four group outputs; after every epoch the
// pooled validation SRCC (all four groups' prediction/target pairs
// concatenated) selects the checkpoint to keep. Audio paths resolve against
// base_dir when relative.
TrainHistory train(PredictorModel& model, const DatasetManifest& manifest,
                   const TrainConfig& cfg, const std::string& base_dir = "");

struct RejectEntry {
  std::string id;
  std::string audio;
  std::string reason;
};

struct AnnotateResult {
  DatasetManifest annotated;
  std::vector<RejectEntry> rejects;
};

// Batch per-utterance annotation: every readable record gains calibrated
// ratings_pred (and ratings, preserving any previous values in ratings_orig).
// Unreadable audio goes to the rejects list and the run continues.
AnnotateResult annotate_corpus(const PredictorModel& model,
                               const CalibrationParams& calib,
                               const DatasetManifest& manifest,
                               const std::string& base_dir = "",
                               int threads = 1);

void save_predictor(const PredictorModel& model, const std::string& path);
PredictorModel load_predictor(const std::string& path);

// Shared front-end path: load -> mono -> resample to the model rate -> mel.
MelSpectrogram frontend_mel(const PredictorModel& model,
                            const std::string& audio_path);

std::string resolve_path(const std::string& base_dir, const std::string& path);

}  // namespace voicelike

#endif  // VOICELIKE_PREDICTOR_HPP_
