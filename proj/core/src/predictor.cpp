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

#include "voicelike/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "voicelike/common.hpp"
#include "voicelike/metrics.hpp"
#include "voicelike/threading.hpp"

namespace voicelike {

namespace {

const ContextSpec& frame1_ctx() {
  static const ContextSpec ctx({-2, 0, 2});
  return ctx;
}
const ContextSpec& frame2_ctx() {
  static const ContextSpec ctx({-6, -3, 0, 3, 6});
  return ctx;
}

constexpr float kPoolEpsVar = 1e-5f;

}  // namespace

bool classify_liked(double rating_mean, double threshold) {
  return rating_mean >= threshold;
}

PredictorModel build_model(std::uint64_t seed, const MelConfig& mel,
                           int sample_rate) {
  PredictorModel m;
  m.mel = mel;
  m.sample_rate = sample_rate;
  auto& p = m.params;
  const std::size_t d_mel = static_cast<std::size_t>(mel.n_mels);
  p.frame1_w = Tensor(3 * d_mel, 32);
  p.frame1_b = Tensor(std::size_t(32));
  p.frame2_w = Tensor(5 * 32, 32);
  p.frame2_b = Tensor(std::size_t(32));
  p.frame3_w = Tensor(32, 32);
  p.frame3_b = Tensor(std::size_t(32));
  p.segment4_w = Tensor(64, 32);
  p.segment4_b = Tensor(std::size_t(32));
  p.segment5_w = Tensor(32, 4);
  p.segment5_b = Tensor(std::size_t(4));

  std::mt19937_64 rng(mix_seed(seed, 0x9d1c));
  kaiming_uniform(p.frame1_w, p.frame1_w.rows(), rng);
  kaiming_uniform(p.frame2_w, p.frame2_w.rows(), rng);
  kaiming_uniform(p.frame3_w, p.frame3_w.rows(), rng);
  kaiming_uniform(p.segment4_w, p.segment4_w.rows(), rng);
  kaiming_uniform(p.segment5_w, p.segment5_w.rows(), rng);
  return m;
}

template <typename S>
typename Tape<S>::Var predictor_forward(
    Tape<S>& tape, const std::vector<typename Tape<S>::Var>& bound,
    typename Tape<S>::Var mel_input) {
  using Var = typename Tape<S>::Var;
  // bound order follows PredictorParamsT::all()
  Var h1 = tape.relu(tape.add_row(
      tape.matmul(tape.splice(mel_input, frame1_ctx()), bound[0]), bound[1]));
  Var h2 = tape.relu(tape.add_row(
      tape.matmul(tape.splice(h1, frame2_ctx()), bound[2]), bound[3]));
  Var h3 = tape.relu(tape.add_row(tape.matmul(h2, bound[4]), bound[5]));
  Var pooled = tape.stats_pool(h3, static_cast<S>(kPoolEpsVar));
  Var h4 = tape.relu(tape.add_row(tape.matmul(pooled, bound[6]), bound[7]));
  return tape.add_row(tape.matmul(h4, bound[8]), bound[9]);
}

template Tape<float>::Var predictor_forward<float>(
    Tape<float>&, const std::vector<Tape<float>::Var>&, Tape<float>::Var);
template Tape<double>::Var predictor_forward<double>(
    Tape<double>&, const std::vector<Tape<double>::Var>&, Tape<double>::Var);

template <typename S>
std::vector<typename Tape<S>::Var> bind_constants(Tape<S>& tape,
                                                  PredictorParamsT<S>& params) {
  std::vector<typename Tape<S>::Var> bound;
  for (auto* t : params.all()) bound.push_back(tape.constant(*t));
  return bound;
}

template std::vector<Tape<float>::Var> bind_constants<float>(
    Tape<float>&, PredictorParamsT<float>&);
template std::vector<Tape<double>::Var> bind_constants<double>(
    Tape<double>&, PredictorParamsT<double>&);

Tensor mel_frames_tensor(const MelSpectrogram& mel) {
  const std::size_t t = mel.num_frames();
  const std::size_t d = mel.num_bins();
  Tensor out(t, d);
  for (std::size_t i = 0; i < t; ++i)
    std::copy(mel.frames[i].begin(), mel.frames[i].end(), out.row_ptr(i));
  return out;
}

namespace {

Tensor normalized_input(const PredictorModel& model, const MelSpectrogram& mel) {
  Tensor input = mel_frames_tensor(mel);
  if (model.input_mean.size() == input.cols() &&
      model.input_std.size() == input.cols()) {
    for (std::size_t t = 0; t < input.rows(); ++t) {
      float* row = input.row_ptr(t);
      for (std::size_t c = 0; c < input.cols(); ++c)
        row[c] = (row[c] - model.input_mean[c]) / model.input_std[c];
    }
  }
  return input;
}

}  // namespace

LikabilityRating predict_raw(const PredictorModel& model,
                             const MelSpectrogram& mel) {
  if (mel.num_frames() < kMinPredictorFrames)
    throw DataError("predict: need at least " +
                    std::to_string(kMinPredictorFrames) + " mel frames, got " +
                    std::to_string(mel.num_frames()));
  Tensor input = normalized_input(model, mel);
  Tape<float> tape;
  auto bound = bind_constants(tape, const_cast<PredictorParams&>(model.params));
  auto out = predictor_forward(tape, bound, tape.constant(input));
  const auto& v = tape.value(out).data;
  LikabilityRating r;
  for (std::size_t g = 0; g < 4; ++g) r.values[g] = v[g];
  return r;
}

CalibrationParams fit_calibration(
    const std::vector<LikabilityRating>& predictions,
    const std::vector<LikabilityRating>& targets) {
  if (predictions.size() != targets.size() || predictions.size() < 2)
    throw DataError("calibration: need >= 2 aligned samples");
  CalibrationParams out;
  std::vector<double> pool_p, pool_t;
  for (std::size_t g = 0; g < 4; ++g) {
    std::vector<double> p, t;
    p.reserve(predictions.size());
    t.reserve(targets.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      p.push_back(predictions[i].values[g]);
      t.push_back(targets[i].values[g]);
      pool_p.push_back(predictions[i].values[g]);
      pool_t.push_back(targets[i].values[g]);
    }
    GroupCalibration c;
    c.mu = mean_of(t);
    c.sigma = population_std(t);
    c.mu_hat = mean_of(p);
    c.sigma_hat = population_std(p);
    if (c.sigma_hat <= 0.0)
      throw DataError("calibration: zero prediction variance in group " +
                      std::string(kGroupNames[g]));
    out.groups[g] = c;
  }
  out.pooled.mu = mean_of(pool_t);
  out.pooled.sigma = population_std(pool_t);
  out.pooled.mu_hat = mean_of(pool_p);
  out.pooled.sigma_hat = population_std(pool_p);
  if (out.pooled.sigma_hat <= 0.0)
    throw DataError("calibration: zero pooled prediction variance");
  return out;
}

LikabilityRating apply_calibration(const CalibrationParams& params,
                                   const LikabilityRating& y_hat) {
  LikabilityRating out;
  for (std::size_t g = 0; g < 4; ++g) {
    const auto& c = params.groups[g];
    out.values[g] =
        c.sigma / c.sigma_hat * (y_hat.values[g] - c.mu_hat) + c.mu;
  }
  return out;
}

void save_calibration(const CalibrationParams& params,
                      const std::string& path) {
  nlohmann::json j;
  j["version"] = 1;
  auto dump_group = [](const GroupCalibration& c) {
    return nlohmann::json{{"mu", c.mu},
                          {"sigma", c.sigma},
                          {"mu_hat", c.mu_hat},
                          {"sigma_hat", c.sigma_hat}};
  };
  for (std::size_t g = 0; g < 4; ++g)
    j["groups"][kGroupNames[g]] = dump_group(params.groups[g]);
  j["pooled"] = dump_group(params.pooled);
  std::ofstream os(path);
  if (!os) throw DataError("calibration: cannot open for write: " + path);
  os << j.dump(2) << "\n";
}

CalibrationParams load_calibration(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("calibration: cannot open: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("calibration: invalid JSON: " + std::string(e.what()));
  }
  auto read_group = [&](const nlohmann::json& g) {
    GroupCalibration c;
    c.mu = g.at("mu").get<double>();
    c.sigma = g.at("sigma").get<double>();
    c.mu_hat = g.at("mu_hat").get<double>();
    c.sigma_hat = g.at("sigma_hat").get<double>();
    return c;
  };
  CalibrationParams out;
  for (std::size_t g = 0; g < 4; ++g)
    out.groups[g] = read_group(j.at("groups").at(kGroupNames[g]));
  out.pooled = read_group(j.at("pooled"));
  return out;
}

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  if (path.empty() || base_dir.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

MelSpectrogram frontend_mel(const PredictorModel& model,
                            const std::string& audio_path) {
  Waveform w = to_mono(load_wav(audio_path));
  if (w.sample_rate != model.sample_rate) w = resample(w, model.sample_rate);
  return log_mel_spectrogram(w, model.mel);
}

namespace {

struct TrainItem {
  Waveform audio;            // mono, model rate
  LikabilityRating target;
};

std::vector<float> crop_or_pad(const std::vector<float>& x, std::size_t len,
                               std::mt19937_64& rng) {
  if (x.size() == len) return x;
  if (x.size() > len) {
    std::uniform_int_distribution<std::size_t> off(0, x.size() - len);
    const std::size_t o = off(rng);
    return std::vector<float>(x.begin() + static_cast<long>(o),
                              x.begin() + static_cast<long>(o + len));
  }
  std::vector<float> out(len, 0.0f);
  std::copy(x.begin(), x.end(), out.begin());
  return out;
}

double pooled_val_srcc(const PredictorModel& model,
                       const std::vector<TrainItem>& val_items,
                       std::vector<LikabilityRating>* predictions_out) {
  std::vector<double> preds, targs;
  if (predictions_out) predictions_out->clear();
  for (const auto& item : val_items) {
    MelSpectrogram mel = log_mel_spectrogram(item.audio, model.mel);
    LikabilityRating y = predict_raw(model, mel);
    if (predictions_out) predictions_out->push_back(y);
    for (std::size_t g = 0; g < 4; ++g) {
      preds.push_back(y.values[g]);
      targs.push_back(item.target.values[g]);
    }
  }
  return spearman_srcc(preds, targs);
}

}  // namespace

TrainHistory train(PredictorModel& model, const DatasetManifest& manifest,
                   const TrainConfig& cfg, const std::string& base_dir) {
  if (cfg.epochs <= 0 || cfg.batch_size <= 0)
    throw ConfigError("train: epochs and batch_size must be positive");
  const std::size_t crop_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.crop_seconds) * model.sample_rate));
  if (crop_len < static_cast<std::size_t>(model.mel.win))
    throw ConfigError("train: crop shorter than one analysis window");

  auto load_split = [&](Split s) {
    std::vector<TrainItem> items;
    for (const auto* rec : manifest.split_records(s)) {
      if (!rec->ratings)
        throw DataError("train: record '" + rec->id + "' has no ratings");
      TrainItem item;
      Waveform w = to_mono(load_wav(resolve_path(base_dir, rec->audio)));
      if (w.sample_rate != model.sample_rate)
        w = resample(w, model.sample_rate);
      item.audio = std::move(w);
      item.target.values = *rec->ratings;
      items.push_back(std::move(item));
    }
    return items;
  };
  std::vector<TrainItem> train_items = load_split(Split::kTrain);
  std::vector<TrainItem> val_items = load_split(Split::kVal);
  if (train_items.empty()) throw DataError("train: empty train split");
  if (val_items.size() < 2) throw DataError("train: validation split too small");

  // Per-bin input normalization from the clean training mels.
  {
    const std::size_t d = static_cast<std::size_t>(model.mel.n_mels);
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    std::size_t count = 0;
    for (const auto& item : train_items) {
      MelSpectrogram mel = log_mel_spectrogram(item.audio, model.mel);
      for (const auto& frame : mel.frames)
        for (std::size_t c = 0; c < d; ++c) mean[c] += frame[c];
      count += mel.num_frames();
    }
    for (auto& v : mean) v /= static_cast<double>(count);
    for (const auto& item : train_items) {
      MelSpectrogram mel = log_mel_spectrogram(item.audio, model.mel);
      for (const auto& frame : mel.frames)
        for (std::size_t c = 0; c < d; ++c) {
          const double dev = frame[c] - mean[c];
          var[c] += dev * dev;
        }
    }
    model.input_mean.resize(d);
    model.input_std.resize(d);
    for (std::size_t c = 0; c < d; ++c) {
      model.input_mean[c] = static_cast<float>(mean[c]);
      model.input_std[c] = static_cast<float>(
          std::max(std::sqrt(var[c] / static_cast<double>(count)), 1e-3));
    }
  }

  std::vector<ImpulseResponse> irs =
      cfg.augment_enabled ? load_impulse_responses(cfg.augment.ir_dir)
                          : std::vector<ImpulseResponse>{};

  auto model_params = model.params.all();
  AdamState adam_state;
  TrainHistory history;
  PredictorParams best_params = model.params;
  double best_srcc = -2.0;
  int best_epoch = -1;
  int since_best = 0;
  const int threads = std::max(cfg.threads, 1);

  std::vector<std::size_t> order(train_items.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0xE));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t nb = stop - start;

      // Per-item gradient buffers keep accumulation order fixed regardless of
      // the worker count.
      std::vector<std::vector<std::vector<float>>> item_grads(nb);
      std::vector<double> item_loss(nb, 0.0);
      parallel_for(nb, threads, [&](std::size_t bi) {
        const std::size_t idx = order[start + bi];
        const TrainItem& item = train_items[idx];
        const std::uint64_t item_seed =
            mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                     static_cast<std::uint64_t>(idx));
        Waveform w = item.audio;
        if (cfg.augment_enabled)
          w = augment_chain(w, cfg.augment, irs, item_seed);
        std::mt19937_64 crop_rng(mix_seed(item_seed, 0xC));
        Waveform cropped = Waveform::mono(
            crop_or_pad(w.samples(), crop_len, crop_rng), model.sample_rate);
        MelSpectrogram mel = log_mel_spectrogram(cropped, model.mel);
        Tensor input = normalized_input(model, mel);

        auto params = model.params.all();
        item_grads[bi].resize(params.size());
        for (std::size_t p = 0; p < params.size(); ++p)
          item_grads[bi][p].assign(params[p]->numel(), 0.0f);

        Tape<float> tape;
        std::vector<Tape<float>::Var> bound;
        for (std::size_t p = 0; p < params.size(); ++p)
          bound.push_back(tape.param(*params[p], &item_grads[bi][p]));
        Tensor target(std::size_t(1), std::size_t(4));
        for (std::size_t g = 0; g < 4; ++g)
          target.data[g] = static_cast<float>(item.target.values[g]);
        auto out = predictor_forward(tape, bound, tape.constant(input));
        auto loss = tape.mse(out, tape.constant(target));
        item_loss[bi] = tape.value(loss).data[0];
        tape.backward(tape.scale(loss, 1.0f / static_cast<float>(nb)));
      });

      for (auto* p : model_params) {
        p->ensure_grad();
        p->zero_grad();
      }
      for (std::size_t bi = 0; bi < nb; ++bi) {
        for (std::size_t p = 0; p < model_params.size(); ++p) {
          auto& dst = model_params[p]->grad;
          const auto& src = item_grads[bi][p];
          for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
        }
        epoch_loss += item_loss[bi];
        ++seen;
      }
      adam_step(model_params, adam_state, cfg.adam);
    }
    epoch_loss /= static_cast<double>(std::max<std::size_t>(seen, 1));
    if (!std::isfinite(epoch_loss))
      throw TrainingDiverged("train: non-finite loss at epoch " +
                             std::to_string(epoch));

    const double srcc = pooled_val_srcc(model, val_items, nullptr);
    history.epochs.push_back({epoch, epoch_loss, srcc});
    if (srcc > best_srcc) {
      best_srcc = srcc;
      best_epoch = epoch;
      best_params = model.params;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }

  model.params = best_params;
  history.best_epoch = best_epoch;
  history.best_val_srcc = best_srcc;
  return history;
}

AnnotateResult annotate_corpus(const PredictorModel& model,
                               const CalibrationParams& calib,
                               const DatasetManifest& manifest,
                               const std::string& base_dir, int threads) {
  AnnotateResult result;
  const std::size_t n = manifest.records.size();
  std::vector<ManifestRecord> out(n);
  std::vector<int> ok(n, 0);
  std::vector<RejectEntry> rejects(n);
  parallel_for(n, std::max(threads, 1), [&](std::size_t i) {
    const ManifestRecord& rec = manifest.records[i];
    ManifestRecord annotated = rec;
    try {
      MelSpectrogram mel = frontend_mel(model, resolve_path(base_dir, rec.audio));
      LikabilityRating y = apply_calibration(calib, predict_raw(model, mel));
      if (annotated.ratings) annotated.ratings_orig = annotated.ratings;
      annotated.ratings = y.values;
      annotated.ratings_pred = y.values;
      out[i] = std::move(annotated);
      ok[i] = 1;
    } catch (const std::exception& e) {
      rejects[i] = {rec.id, rec.audio, e.what()};
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i]) {
      result.annotated.records.push_back(std::move(out[i]));
    } else {
      result.rejects.push_back(std::move(rejects[i]));
    }
  }
  return result;
}

namespace {

Tensor frontend_meta_tensor(const PredictorModel& model) {
  Tensor t(std::size_t(8));
  t.data = {static_cast<float>(model.mel.n_mels), model.mel.f_min,
            model.mel.f_max, static_cast<float>(model.mel.hop),
            static_cast<float>(model.mel.win),
            static_cast<float>(model.mel.fft_size), model.mel.log_floor,
            static_cast<float>(model.sample_rate)};
  return t;
}

void frontend_from_meta(const Tensor& t, PredictorModel& model) {
  if (t.numel() != 8) throw DataError("checkpoint: bad frontend meta tensor");
  model.mel.n_mels = static_cast<int>(t.data[0]);
  model.mel.f_min = t.data[1];
  model.mel.f_max = t.data[2];
  model.mel.hop = static_cast<int>(t.data[3]);
  model.mel.win = static_cast<int>(t.data[4]);
  model.mel.fft_size = static_cast<int>(t.data[5]);
  model.mel.log_floor = t.data[6];
  model.sample_rate = static_cast<int>(t.data[7]);
}

}  // namespace

void save_predictor(const PredictorModel& model, const std::string& path) {
  Checkpoint ckpt;
  ckpt.add("meta/frontend", frontend_meta_tensor(model));
  if (!model.input_mean.empty()) {
    Tensor mean(model.input_mean.size());
    mean.data = model.input_mean;
    ckpt.add("meta/input_mean", mean);
    Tensor sd(model.input_std.size());
    sd.data = model.input_std;
    ckpt.add("meta/input_std", sd);
  }
  for (auto& [name, t] : const_cast<PredictorModel&>(model).params.named()) {
    Tensor copy = *t;
    copy.grad.clear();
    ckpt.add(name, copy);
  }
  save_checkpoint(ckpt, path);
}

PredictorModel load_predictor(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  PredictorModel model;
  frontend_from_meta(ckpt.require("meta/frontend"), model);
  if (const Tensor* mean = ckpt.find("meta/input_mean")) {
    model.input_mean = mean->data;
    model.input_std = ckpt.require("meta/input_std").data;
  }
  for (auto& [name, t] : model.params.named()) *t = ckpt.require(name);
  return model;
}

}  // namespace voicelike
