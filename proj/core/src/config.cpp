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

#include "voicelike/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "voicelike/common.hpp"

namespace voicelike {

using nlohmann::json;

std::vector<float> RunConfig::target_grid() const {
  std::vector<float> grid;
  if (target_step <= 0.0f)
    throw ConfigError("config: target_step must be > 0");
  for (double v = target_min; v <= target_max + 1e-6; v += target_step)
    grid.push_back(static_cast<float>(v));
  return grid;
}

namespace {

// Applies `j` onto defaults field by field, rejecting unknown keys so typos
// fail loudly instead of silently running with defaults.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ConfigError("config: " + path_ + " must be an object");
    for (auto it = j_.begin(); it != j_.end(); ++it)
      pending_.insert(it.key());
  }

  ~Reader() = default;

  void finish() const {
    if (!pending_.empty())
      throw ConfigError("config: unknown key '" + path_ + "." +
                        *pending_.begin() + "'");
  }

  bool has(const char* key) {
    return j_.contains(key);
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    pending_.erase(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + path_ + "." + key +
                        "': " + e.what());
    }
  }

  const json* child(const char* key) {
    if (!j_.contains(key)) return nullptr;
    pending_.erase(key);
    return &j_.at(key);
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> pending_;
};

void read_mel(const json& j, const std::string& path, MelConfig& cfg) {
  Reader r(j, path);
  r.get("n_mels", cfg.n_mels);
  r.get("f_min", cfg.f_min);
  r.get("f_max", cfg.f_max);
  r.get("hop", cfg.hop);
  r.get("win", cfg.win);
  r.get("fft_size", cfg.fft_size);
  r.get("log_floor", cfg.log_floor);
  r.finish();
}

void read_adam(const json& j, const std::string& path, AdamConfig& cfg) {
  Reader r(j, path);
  r.get("lr", cfg.lr);
  r.get("beta1", cfg.beta1);
  r.get("beta2", cfg.beta2);
  r.get("eps", cfg.eps);
  r.get("weight_decay", cfg.weight_decay);
  r.finish();
}

void read_augment(const json& j, const std::string& path, AugmentConfig& cfg) {
  Reader r(j, path);
  r.get("max_pad_sec", cfg.max_pad_sec);
  r.get("snr_db_min", cfg.snr_db_min);
  r.get("snr_db_max", cfg.snr_db_max);
  r.get("reverb_prob", cfg.reverb_prob);
  r.get("noise_prob", cfg.noise_prob);
  r.get("reverse_prob", cfg.reverse_prob);
  r.get("pad_prob", cfg.pad_prob);
  r.get("ir_dir", cfg.ir_dir);
  r.finish();
}

void read_train(const json& j, const std::string& path, TrainConfig& cfg) {
  Reader r(j, path);
  r.get("epochs", cfg.epochs);
  r.get("batch_size", cfg.batch_size);
  r.get("crop_seconds", cfg.crop_seconds);
  r.get("patience", cfg.patience);
  r.get("augment_enabled", cfg.augment_enabled);
  if (const json* a = r.child("augment"))
    read_augment(*a, path + ".augment", cfg.augment);
  if (const json* a = r.child("adam")) read_adam(*a, path + ".adam", cfg.adam);
  r.finish();
}

void read_units(const json& j, const std::string& path, KMeansConfig& cfg) {
  Reader r(j, path);
  r.get("k", cfg.k);
  r.get("batch_size", cfg.batch_size);
  r.get("iterations", cfg.iterations);
  r.finish();
}

void read_converter(const json& j, const std::string& path,
                    ConverterConfig& cfg) {
  Reader r(j, path);
  r.get("vocab_k", cfg.vocab_k);
  r.get("embed_dim", cfg.embed_dim);
  r.get("encoder_depth", cfg.encoder_depth);
  r.get("decoder_depth", cfg.decoder_depth);
  r.get("mel_bins", cfg.mel_bins);
  r.get("duration_hidden", cfg.duration_hidden);
  r.get("speaker_dim", cfg.speaker_dim);
  r.finish();
}

void read_converter_train(const json& j, const std::string& path,
                          ConverterTrainConfig& cfg) {
  Reader r(j, path);
  r.get("epochs", cfg.epochs);
  r.get("batch_size", cfg.batch_size);
  r.get("s_train", cfg.s_train);
  r.get("duration_loss_weight", cfg.duration_loss_weight);
  r.get("shuffle", cfg.shuffle);
  if (const json* a = r.child("adam")) read_adam(*a, path + ".adam", cfg.adam);
  r.finish();
}

void read_synthetic(const json& j, const std::string& path,
                    SyntheticConfig& cfg) {
  Reader r(j, path);
  r.get("speakers", cfg.speakers);
  r.get("clips_per_speaker", cfg.clips_per_speaker);
  r.get("clip_seconds", cfg.clip_seconds);
  r.get("val_fraction", cfg.val_fraction);
  r.get("test_fraction", cfg.test_fraction);
  r.get("rating_noise", cfg.rating_noise);
  r.finish();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  Reader r(j, "$");
  r.get("seed", cfg.seed);
  r.get("threads", cfg.threads);
  r.get("sample_rate", cfg.sample_rate);
  if (const json* c = r.child("mel")) read_mel(*c, "mel", cfg.mel);
  if (const json* c = r.child("train")) read_train(*c, "train", cfg.train);
  if (const json* c = r.child("units")) read_units(*c, "units", cfg.units);
  if (const json* c = r.child("converter"))
    read_converter(*c, "converter", cfg.converter);
  if (const json* c = r.child("converter_train"))
    read_converter_train(*c, "converter_train", cfg.converter_train);
  if (const json* c = r.child("synthetic"))
    read_synthetic(*c, "synthetic", cfg.synthetic);
  r.get("s_eval", cfg.s_eval);
  r.get("target_min", cfg.target_min);
  r.get("target_max", cfg.target_max);
  r.get("target_step", cfg.target_step);
  r.finish();

  // Seeds and thread caps fan out from the run-level settings.
  cfg.train.seed = cfg.seed;
  cfg.units.seed = cfg.seed;
  cfg.converter.seed = cfg.seed;
  cfg.converter_train.seed = cfg.seed;
  cfg.synthetic.seed = cfg.seed;
  cfg.synthetic.sample_rate = cfg.sample_rate;
  cfg.converter.mel_bins = cfg.mel.n_mels;
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["sample_rate"] = cfg.sample_rate;
  j["mel"] = {{"n_mels", cfg.mel.n_mels},   {"f_min", cfg.mel.f_min},
              {"f_max", cfg.mel.f_max},     {"hop", cfg.mel.hop},
              {"win", cfg.mel.win},         {"fft_size", cfg.mel.fft_size},
              {"log_floor", cfg.mel.log_floor}};
  j["train"] = {
      {"epochs", cfg.train.epochs},
      {"batch_size", cfg.train.batch_size},
      {"crop_seconds", cfg.train.crop_seconds},
      {"patience", cfg.train.patience},
      {"augment_enabled", cfg.train.augment_enabled},
      {"augment",
       {{"max_pad_sec", cfg.train.augment.max_pad_sec},
        {"snr_db_min", cfg.train.augment.snr_db_min},
        {"snr_db_max", cfg.train.augment.snr_db_max},
        {"reverb_prob", cfg.train.augment.reverb_prob},
        {"noise_prob", cfg.train.augment.noise_prob},
        {"reverse_prob", cfg.train.augment.reverse_prob},
        {"pad_prob", cfg.train.augment.pad_prob},
        {"ir_dir", cfg.train.augment.ir_dir}}},
      {"adam",
       {{"lr", cfg.train.adam.lr},
        {"beta1", cfg.train.adam.beta1},
        {"beta2", cfg.train.adam.beta2},
        {"eps", cfg.train.adam.eps},
        {"weight_decay", cfg.train.adam.weight_decay}}}};
  j["units"] = {{"k", cfg.units.k},
                {"batch_size", cfg.units.batch_size},
                {"iterations", cfg.units.iterations}};
  j["converter"] = {{"vocab_k", cfg.converter.vocab_k},
                    {"embed_dim", cfg.converter.embed_dim},
                    {"encoder_depth", cfg.converter.encoder_depth},
                    {"decoder_depth", cfg.converter.decoder_depth},
                    {"mel_bins", cfg.converter.mel_bins},
                    {"duration_hidden", cfg.converter.duration_hidden},
                    {"speaker_dim", cfg.converter.speaker_dim}};
  j["converter_train"] = {
      {"epochs", cfg.converter_train.epochs},
      {"batch_size", cfg.converter_train.batch_size},
      {"s_train", cfg.converter_train.s_train},
      {"duration_loss_weight", cfg.converter_train.duration_loss_weight},
      {"shuffle", cfg.converter_train.shuffle},
      {"adam",
       {{"lr", cfg.converter_train.adam.lr},
        {"beta1", cfg.converter_train.adam.beta1},
        {"beta2", cfg.converter_train.adam.beta2},
        {"eps", cfg.converter_train.adam.eps},
        {"weight_decay", cfg.converter_train.adam.weight_decay}}}};
  j["synthetic"] = {{"speakers", cfg.synthetic.speakers},
                    {"clips_per_speaker", cfg.synthetic.clips_per_speaker},
                    {"clip_seconds", cfg.synthetic.clip_seconds},
                    {"val_fraction", cfg.synthetic.val_fraction},
                    {"test_fraction", cfg.synthetic.test_fraction},
                    {"rating_noise", cfg.synthetic.rating_noise}};
  j["s_eval"] = cfg.s_eval;
  j["target_min"] = cfg.target_min;
  j["target_max"] = cfg.target_max;
  j["target_step"] = cfg.target_step;
  return j.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
  return to_hex16(fnv1a64(dump_run_config(cfg)));
}

}  // namespace voicelike
