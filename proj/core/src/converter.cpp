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

#include "voicelike/converter.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "voicelike/common.hpp"
#include "voicelike/threading.hpp"

namespace voicelike {

namespace {

const ContextSpec& kernel3_ctx() {
  static const ContextSpec ctx({-1, 0, 1});
  return ctx;
}

void write_u32_raw(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_raw(std::istream& is, const std::string& path) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw DataError("embedding: truncated file: " + path);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

Tensor row_tensor(const std::vector<float>& v) {
  Tensor t(std::size_t(1), v.size());
  std::copy(v.begin(), v.end(), t.data.begin());
  return t;
}

Tensor rating_tensor(const LikabilityRating& r) {
  Tensor t(std::size_t(1), std::size_t(4));
  for (std::size_t g = 0; g < 4; ++g) t.data[g] = static_cast<float>(r.values[g]);
  return t;
}

void check_input(const ConverterModel& model, const ConditioningInput& inp) {
  if (inp.units.ids.empty()) throw DataError("condition: empty unit sequence");
  for (int id : inp.units.ids)
    if (id < 0 || id >= model.config.vocab_k)
      throw DataError("condition: unit id out of range");
  if (inp.speaker.values.size() !=
      static_cast<std::size_t>(model.config.speaker_dim))
    throw DataError("condition: speaker embedding dimension mismatch");
  if (!std::isfinite(static_cast<double>(inp.s)))
    throw DataError("condition: scale must be finite");
}

}  // namespace

void save_embedding(const SpeakerEmbedding& e, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("embedding: cannot open for write: " + path);
  os.write("LKBE", 4);
  write_u32_raw(os, static_cast<std::uint32_t>(e.values.size()));
  os.write(reinterpret_cast<const char*>(e.values.data()),
           static_cast<std::streamsize>(e.values.size() * sizeof(float)));
  if (!os) throw DataError("embedding: write failed: " + path);
}

SpeakerEmbedding load_embedding(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("embedding: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "LKBE", 4) != 0)
    throw DataError("embedding: bad magic in " + path);
  const std::uint32_t d = read_u32_raw(is, path);
  SpeakerEmbedding e;
  e.values.resize(d);
  is.read(reinterpret_cast<char*>(e.values.data()),
          static_cast<std::streamsize>(d * sizeof(float)));
  if (!is) throw DataError("embedding: truncated file: " + path);
  double norm = 0.0;
  for (float v : e.values) {
    if (!std::isfinite(v))
      throw DataError("embedding: non-finite values in " + path);
    norm += static_cast<double>(v) * v;
  }
  if (norm == 0.0) throw DataError("embedding: zero vector in " + path);
  return e;
}

SpeakerEmbedding fallback_speaker_embedding(const MelSpectrogram& mel) {
  const std::size_t t = mel.num_frames();
  const std::size_t d = mel.num_bins();
  if (t == 0) throw DataError("embedding: empty mel");
  SpeakerEmbedding e;
  e.values.assign(2 * d, 0.0f);
  for (const auto& frame : mel.frames)
    for (std::size_t c = 0; c < d; ++c) e.values[c] += frame[c];
  for (std::size_t c = 0; c < d; ++c) e.values[c] /= static_cast<float>(t);
  for (const auto& frame : mel.frames)
    for (std::size_t c = 0; c < d; ++c) {
      const float dev = frame[c] - e.values[c];
      e.values[d + c] += dev * dev;
    }
  for (std::size_t c = 0; c < d; ++c)
    e.values[d + c] = std::sqrt(e.values[d + c] / static_cast<float>(t));
  return e;
}

template <typename S>
std::vector<TensorT<S>*> ConverterParamsT<S>::all() {
  std::vector<TensorT<S>*> out{&token_embedding, &speaker_proj, &rating_proj};
  for (auto& b : encoder) {
    out.push_back(&b.w1);
    out.push_back(&b.b1);
    out.push_back(&b.w2);
    out.push_back(&b.b2);
  }
  out.push_back(&dur_w1);
  out.push_back(&dur_b1);
  out.push_back(&dur_w2);
  out.push_back(&dur_b2);
  for (auto& b : decoder) {
    out.push_back(&b.w1);
    out.push_back(&b.b1);
    out.push_back(&b.w2);
    out.push_back(&b.b2);
  }
  out.push_back(&mel_w);
  out.push_back(&mel_b);
  return out;
}

template <typename S>
std::vector<std::pair<std::string, TensorT<S>*>> ConverterParamsT<S>::named() {
  std::vector<std::pair<std::string, TensorT<S>*>> out{
      {"token_embedding", &token_embedding},
      {"speaker_proj", &speaker_proj},
      {"rating_proj", &rating_proj}};
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    const std::string p = "encoder" + std::to_string(i);
    out.emplace_back(p + "/w1", &encoder[i].w1);
    out.emplace_back(p + "/b1", &encoder[i].b1);
    out.emplace_back(p + "/w2", &encoder[i].w2);
    out.emplace_back(p + "/b2", &encoder[i].b2);
  }
  out.emplace_back("duration/w1", &dur_w1);
  out.emplace_back("duration/b1", &dur_b1);
  out.emplace_back("duration/w2", &dur_w2);
  out.emplace_back("duration/b2", &dur_b2);
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    const std::string p = "decoder" + std::to_string(i);
    out.emplace_back(p + "/w1", &decoder[i].w1);
    out.emplace_back(p + "/b1", &decoder[i].b1);
    out.emplace_back(p + "/w2", &decoder[i].w2);
    out.emplace_back(p + "/b2", &decoder[i].b2);
  }
  out.emplace_back("mel_head/w", &mel_w);
  out.emplace_back("mel_head/b", &mel_b);
  return out;
}

template <typename S>
template <typename U>
ConverterParamsT<U> ConverterParamsT<S>::cast() const {
  ConverterParamsT<U> out;
  out.token_embedding = token_embedding.template cast<U>();
  out.speaker_proj = speaker_proj.template cast<U>();
  out.rating_proj = rating_proj.template cast<U>();
  for (const auto& b : encoder)
    out.encoder.push_back({b.w1.template cast<U>(), b.b1.template cast<U>(),
                           b.w2.template cast<U>(), b.b2.template cast<U>()});
  out.dur_w1 = dur_w1.template cast<U>();
  out.dur_b1 = dur_b1.template cast<U>();
  out.dur_w2 = dur_w2.template cast<U>();
  out.dur_b2 = dur_b2.template cast<U>();
  for (const auto& b : decoder)
    out.decoder.push_back({b.w1.template cast<U>(), b.b1.template cast<U>(),
                           b.w2.template cast<U>(), b.b2.template cast<U>()});
  out.mel_w = mel_w.template cast<U>();
  out.mel_b = mel_b.template cast<U>();
  return out;
}

template struct ConverterParamsT<float>;
template struct ConverterParamsT<double>;
template ConverterParamsT<double> ConverterParamsT<float>::cast<double>() const;
template ConverterParamsT<float> ConverterParamsT<double>::cast<float>() const;

ConverterModel build_converter(const ConverterConfig& cfg, const MelConfig& mel,
                               int sample_rate) {
  if (cfg.vocab_k <= 0 || cfg.embed_dim <= 0)
    throw ConfigError("converter: vocab_k and embed_dim must be positive");
  if (cfg.encoder_depth < 0 || cfg.decoder_depth < 0)
    throw ConfigError("converter: depths must be >= 0");
  ConverterModel m;
  m.config = cfg;
  m.mel = mel;
  m.sample_rate = sample_rate;
  const std::size_t k = static_cast<std::size_t>(cfg.vocab_k);
  const std::size_t e = static_cast<std::size_t>(cfg.embed_dim);
  const std::size_t h = static_cast<std::size_t>(cfg.duration_hidden);
  const std::size_t ds = static_cast<std::size_t>(cfg.speaker_dim);
  const std::size_t mb = static_cast<std::size_t>(cfg.mel_bins);

  auto& p = m.params;
  p.token_embedding = Tensor(k, e);
  p.speaker_proj = Tensor(ds, e);
  p.rating_proj = Tensor(std::size_t(4), e);
  p.encoder.resize(static_cast<std::size_t>(cfg.encoder_depth));
  p.decoder.resize(static_cast<std::size_t>(cfg.decoder_depth));
  for (auto& b : p.encoder) {
    b.w1 = Tensor(3 * e, e);
    b.b1 = Tensor(e);
    b.w2 = Tensor(3 * e, e);
    b.b2 = Tensor(e);
  }
  for (auto& b : p.decoder) {
    b.w1 = Tensor(3 * e, e);
    b.b1 = Tensor(e);
    b.w2 = Tensor(3 * e, e);
    b.b2 = Tensor(e);
  }
  p.dur_w1 = Tensor(e, h);
  p.dur_b1 = Tensor(h);
  p.dur_w2 = Tensor(h, std::size_t(1));
  p.dur_b2 = Tensor(std::size_t(1));
  p.mel_w = Tensor(e, mb);
  p.mel_b = Tensor(mb);

  std::mt19937_64 rng(mix_seed(cfg.seed, 0xC0DE));
  uniform_init(p.token_embedding, std::sqrt(3.0f / static_cast<float>(e)), rng);
  kaiming_uniform(p.speaker_proj, ds, rng);
  kaiming_uniform(p.rating_proj, 4, rng);
  for (auto& b : p.encoder) {
    kaiming_uniform(b.w1, 3 * e, rng);
    kaiming_uniform(b.w2, 3 * e, rng);
  }
  kaiming_uniform(p.dur_w1, e, rng);
  kaiming_uniform(p.dur_w2, h, rng);
  for (auto& b : p.decoder) {
    kaiming_uniform(b.w1, 3 * e, rng);
    kaiming_uniform(b.w2, 3 * e, rng);
  }
  kaiming_uniform(p.mel_w, e, rng);

  m.mel_mean.assign(mb, 0.0f);
  m.mel_std.assign(mb, 1.0f);
  return m;
}

template <typename S>
ConverterGraph<S>::ConverterGraph(Tape<S>& tape, ConverterParamsT<S>& params,
                                  std::vector<std::vector<S>>* grad_sinks,
                                  bool own_grads)
    : tape_(tape),
      enc_depth_(params.encoder.size()),
      dec_depth_(params.decoder.size()) {
  auto tensors = params.all();
  if (grad_sinks) {
    grad_sinks->resize(tensors.size());
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      (*grad_sinks)[i].assign(tensors[i]->numel(), S(0));
      bound_.push_back(tape_.param(*tensors[i], &(*grad_sinks)[i]));
    }
  } else if (own_grads) {
    for (auto* t : tensors) bound_.push_back(tape_.param(*t));
  } else {
    for (auto* t : tensors) bound_.push_back(tape_.constant(*t));
  }
  dur0_ = 3 + 4 * enc_depth_;
  dec0_ = dur0_ + 4;
  mel_w_ = dec0_ + 4 * dec_depth_;
  mel_b_ = mel_w_ + 1;
}

template <typename S>
typename ConverterGraph<S>::Var ConverterGraph<S>::conv_block(std::size_t base,
                                                              Var x) {
  auto h = tape_.relu(tape_.add_row(
      tape_.matmul(tape_.splice_padded(x, kernel3_ctx()), bound_[base]),
      bound_[base + 1]));
  auto y = tape_.add_row(
      tape_.matmul(tape_.splice_padded(h, kernel3_ctx()), bound_[base + 2]),
      bound_[base + 3]);
  return tape_.add(x, y);
}

template <typename S>
typename ConverterGraph<S>::Var ConverterGraph<S>::preencoder(
    const std::vector<int>& ids, const TensorT<S>& speaker_row,
    const TensorT<S>& rating_row, S s) {
  if (ids.empty()) throw DataError("condition: empty unit sequence");
  if (!std::isfinite(static_cast<double>(s)))
    throw DataError("condition: scale must be finite");
  auto tokens = tape_.gather_rows(bound_[0], ids);
  auto spk = tape_.matmul(tape_.constant(speaker_row), bound_[1]);  // 1 x E
  auto rate = tape_.matmul(tape_.constant(rating_row), bound_[2]);  // 1 x E
  return tape_.add_row(tape_.add_row(tokens, spk), tape_.scale(rate, s));
}

template <typename S>
typename ConverterGraph<S>::Var ConverterGraph<S>::encode(Var pre) {
  auto h = pre;
  for (std::size_t i = 0; i < enc_depth_; ++i) h = conv_block(3 + 4 * i, h);
  return h;
}

template <typename S>
typename ConverterGraph<S>::Var ConverterGraph<S>::log_durations(Var encoded) {
  auto h = tape_.relu(
      tape_.add_row(tape_.matmul(encoded, bound_[dur0_]), bound_[dur0_ + 1]));
  return tape_.add_row(tape_.matmul(h, bound_[dur0_ + 2]), bound_[dur0_ + 3]);
}

template <typename S>
typename ConverterGraph<S>::Var ConverterGraph<S>::decode(Var frame_hidden) {
  auto h = frame_hidden;
  for (std::size_t i = 0; i < dec_depth_; ++i) h = conv_block(dec0_ + 4 * i, h);
  return tape_.add_row(tape_.matmul(h, bound_[mel_w_]), bound_[mel_b_]);
}

template class ConverterGraph<float>;
template class ConverterGraph<double>;

Tensor condition_preencoder(const ConverterModel& model,
                            const ConditioningInput& inp) {
  check_input(model, inp);
  auto& params = const_cast<ConverterParams&>(model.params);
  Tape<float> tape;
  ConverterGraph<float> graph(tape, params);
  Tensor spk = row_tensor(inp.speaker.values);
  Tensor rate = rating_tensor(inp.target);
  auto pre = graph.preencoder(inp.units.ids, spk, rate, inp.s);
  return tape.value(pre);
}

Tensor condition(const ConverterModel& model, const ConditioningInput& inp) {
  check_input(model, inp);
  auto& params = const_cast<ConverterParams&>(model.params);
  Tape<float> tape;
  ConverterGraph<float> graph(tape, params);
  Tensor spk = row_tensor(inp.speaker.values);
  Tensor rate = rating_tensor(inp.target);
  auto enc = graph.encode(graph.preencoder(inp.units.ids, spk, rate, inp.s));
  return tape.value(enc);
}

std::vector<int> predict_durations(const ConverterModel& model,
                                   const Tensor& encoded_hidden) {
  if (encoded_hidden.rows() == 0)
    throw DataError("durations: empty hidden sequence");
  auto& params = const_cast<ConverterParams&>(model.params);
  Tape<float> tape;
  ConverterGraph<float> graph(tape, params);
  auto logd = graph.log_durations(tape.constant(encoded_hidden));
  const auto& v = tape.value(logd).data;
  std::vector<int> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    long d = std::lround(std::exp(static_cast<double>(v[i])));
    out[i] = static_cast<int>(std::max(d, 1L));
  }
  return out;
}

Tensor length_regulate(const Tensor& hidden, const std::vector<int>& durations) {
  if (durations.size() != hidden.rows())
    throw DataError("length_regulate: misaligned lengths");
  std::size_t total = 0;
  for (int d : durations) {
    if (d <= 0) throw DataError("length_regulate: durations must be positive");
    total += static_cast<std::size_t>(d);
  }
  Tensor out(total, hidden.cols());
  std::size_t o = 0;
  for (std::size_t r = 0; r < hidden.rows(); ++r) {
    for (int q = 0; q < durations[r]; ++q, ++o)
      std::copy(hidden.row_ptr(r), hidden.row_ptr(r) + hidden.cols(),
                out.row_ptr(o));
  }
  return out;
}

MelSpectrogram decode_mel(const ConverterModel& model,
                          const Tensor& frame_hidden) {
  if (frame_hidden.rows() == 0)
    throw DataError("decode: empty hidden sequence");
  auto& params = const_cast<ConverterParams&>(model.params);
  Tape<float> tape;
  ConverterGraph<float> graph(tape, params);
  auto mel_norm = graph.decode(tape.constant(frame_hidden));
  const Tensor& out = tape.value(mel_norm);
  MelSpectrogram mel;
  mel.config = model.mel;
  mel.sample_rate = model.sample_rate;
  const float floor_val = std::log(model.mel.log_floor);
  mel.frames.assign(
      out.rows(),
      std::vector<float>(static_cast<std::size_t>(model.config.mel_bins)));
  for (std::size_t t = 0; t < out.rows(); ++t) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      float v = out.at(t, c) * model.mel_std[c] + model.mel_mean[c];
      mel.frames[t][c] = std::max(v, floor_val);
    }
  }
  return mel;
}

namespace {

Tensor normalize_mel_target(const ConverterModel& model, const Tensor& mel) {
  Tensor out = mel;
  for (std::size_t t = 0; t < out.rows(); ++t)
    for (std::size_t c = 0; c < out.cols(); ++c)
      out.at(t, c) = (out.at(t, c) - model.mel_mean[c]) / model.mel_std[c];
  return out;
}

Tensor log_run_lengths(const std::vector<int>& runs) {
  Tensor t(runs.size(), std::size_t(1));
  for (std::size_t i = 0; i < runs.size(); ++i)
    t.data[i] = std::log(static_cast<float>(runs[i]));
  return t;
}

}  // namespace

ConverterTrainStats train_converter(ConverterModel& model,
                                    const std::vector<ConverterExample>& data,
                                    const ConverterTrainConfig& cfg) {
  if (data.empty()) throw DataError("converter: no training examples");
  if (cfg.epochs <= 0 || cfg.batch_size <= 0)
    throw ConfigError("converter: epochs and batch_size must be positive");
  for (const auto& ex : data) {
    if (ex.units.ids.empty() ||
        ex.units.run_lengths.size() != ex.units.ids.size())
      throw DataError("converter: example '" + ex.id +
                      "' lacks deduped units with run lengths");
    std::size_t total = 0;
    for (int r : ex.units.run_lengths) total += static_cast<std::size_t>(r);
    if (total != ex.mel_target.rows())
      throw DataError("converter: example '" + ex.id +
                      "' mel target misaligned with unit run lengths");
  }

  // Normalization stats over the training targets: per-bin centering with a
  // single global scale. A per-bin scale would blow near-silent bins (pure
  // spectral-leakage ripple) up to unit variance and put a hard floor under
  // the reachable loss.
  const std::size_t mb = static_cast<std::size_t>(model.config.mel_bins);
  std::vector<double> mean(mb, 0.0);
  double var = 0.0;
  std::size_t total_frames = 0;
  for (const auto& ex : data) {
    for (std::size_t t = 0; t < ex.mel_target.rows(); ++t)
      for (std::size_t c = 0; c < mb; ++c) mean[c] += ex.mel_target.at(t, c);
    total_frames += ex.mel_target.rows();
  }
  for (auto& v : mean) v /= static_cast<double>(total_frames);
  for (const auto& ex : data)
    for (std::size_t t = 0; t < ex.mel_target.rows(); ++t)
      for (std::size_t c = 0; c < mb; ++c) {
        const double d = ex.mel_target.at(t, c) - mean[c];
        var += d * d;
      }
  const double global_std = std::max(
      std::sqrt(var / static_cast<double>(total_frames * mb)), 1e-3);
  for (std::size_t c = 0; c < mb; ++c) {
    model.mel_mean[c] = static_cast<float>(mean[c]);
    model.mel_std[c] = static_cast<float>(global_std);
  }

  auto model_params = model.params.all();
  AdamState adam_state;
  ConverterTrainStats stats;
  const int threads = std::max(cfg.threads, 1);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      std::mt19937_64 rng(
          mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0xD));
      std::shuffle(order.begin(), order.end(), rng);
    }
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(
          order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t nb = stop - start;
      std::vector<std::vector<std::vector<float>>> item_grads(nb);
      std::vector<double> item_loss(nb, 0.0);
      parallel_for(nb, threads, [&](std::size_t bi) {
        const ConverterExample& ex = data[order[start + bi]];
        Tape<float> tape;
        ConverterGraph<float> graph(tape, model.params, &item_grads[bi]);

        Tensor spk = row_tensor(ex.speaker.values);
        Tensor rate = rating_tensor(ex.rating);
        Tensor mel_norm = normalize_mel_target(model, ex.mel_target);
        Tensor dur_target = log_run_lengths(ex.units.run_lengths);

        auto pre = graph.preencoder(ex.units.ids, spk, rate, cfg.s_train);
        auto enc = graph.encode(pre);
        auto logd = graph.log_durations(enc);
        auto frames = tape.repeat_rows(enc, ex.units.run_lengths);
        auto mel_pred = graph.decode(frames);
        auto mel_loss = tape.mse(mel_pred, tape.constant(mel_norm));
        auto dur_loss = tape.mse(logd, tape.constant(dur_target));
        auto loss =
            tape.add(mel_loss, tape.scale(dur_loss, cfg.duration_loss_weight));
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
      throw TrainingDiverged("converter: non-finite loss at epoch " +
                             std::to_string(epoch));
    stats.epoch_loss.push_back(epoch_loss);
  }

  // Final teacher-forced fit quality.
  double mel_acc = 0.0, dur_acc = 0.0;
  std::size_t mel_n = 0, dur_n = 0;
  for (const auto& ex : data) {
    ConditioningInput inp{ex.units, ex.speaker, ex.rating, cfg.s_train};
    Tensor enc = condition(model, inp);
    Tensor frames = length_regulate(enc, ex.units.run_lengths);
    Tape<float> tape;
    ConverterGraph<float> graph(tape, model.params);
    auto mel_pred = graph.decode(tape.constant(frames));
    Tensor mel_norm = normalize_mel_target(model, ex.mel_target);
    const auto& pv = tape.value(mel_pred).data;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double d = static_cast<double>(pv[i]) - mel_norm.data[i];
      mel_acc += d * d;
    }
    mel_n += pv.size();
    std::vector<int> pred_dur = predict_durations(model, enc);
    for (std::size_t i = 0; i < pred_dur.size(); ++i)
      dur_acc += std::abs(pred_dur[i] - ex.units.run_lengths[i]);
    dur_n += pred_dur.size();
  }
  stats.final_mel_mse =
      mel_acc / static_cast<double>(std::max<std::size_t>(mel_n, 1));
  stats.final_duration_mae =
      dur_acc / static_cast<double>(std::max<std::size_t>(dur_n, 1));
  return stats;
}

MelSpectrogram convert(const ConverterModel& model,
                       const FeatureSequence& feats, const Codebook& cb,
                       const SpeakerEmbedding& speaker,
                       const LikabilityRating& target, float s,
                       const std::vector<int>* forced_durations) {
  if (static_cast<int>(cb.k()) != model.config.vocab_k)
    throw DataError("convert: codebook size does not match the model vocab");
  UnitSequence units = dedup_runs(quantize(cb, feats));
  ConditioningInput inp{units, speaker, target, s};
  Tensor enc = condition(model, inp);
  std::vector<int> durations =
      forced_durations ? *forced_durations : predict_durations(model, enc);
  Tensor frames = length_regulate(enc, durations);
  return decode_mel(model, frames);
}

namespace {

// Cholesky solve of (A + ridge*I) x = b for a small SPD matrix.
std::vector<double> spd_solve(std::vector<std::vector<double>> a,
                              std::vector<double> b, double ridge) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) a[i][i] += ridge;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a[i][j];
      for (std::size_t k = 0; k < j; ++k) sum -= a[i][k] * a[j][k];
      if (i == j) {
        if (sum <= 0.0) throw DataError("griffin-lim: filterbank not SPD");
        a[i][i] = std::sqrt(sum);
      } else {
        a[i][j] = sum / a[j][j];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = b[i];
    for (std::size_t k = 0; k < i; ++k) sum -= a[i][k] * b[k];
    b[i] = sum / a[i][i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double sum = b[i];
    for (std::size_t k = i + 1; k < n; ++k) sum -= a[k][i] * b[k];
    b[i] = sum / a[i][i];
  }
  return b;
}

}  // namespace

Waveform griffin_lim_vocoder(const MelSpectrogram& mel, int iterations) {
  if (mel.num_frames() == 0) throw DataError("griffin-lim: empty mel");
  if (mel.sample_rate <= 0)
    throw DataError("griffin-lim: mel carries no sample rate");
  const MelConfig& cfg = mel.config;
  if (static_cast<int>(mel.num_bins()) != cfg.n_mels)
    throw DataError("griffin-lim: mel config mismatch");
  const auto fb = mel_filterbank(cfg, mel.sample_rate);
  const std::size_t n_mels = fb.size();
  const std::size_t n_bins = fb[0].size();
  const std::size_t t_frames = mel.num_frames();

  // Ridge-regularized right pseudo-inverse via the n_mels x n_mels Gram
  // matrix. The ridge scales with the Gram trace so near-singular filter
  // directions cannot amplify floor-level mel energies into audible output.
  std::vector<std::vector<double>> gram(n_mels,
                                        std::vector<double>(n_mels, 0.0));
  double trace = 0.0;
  for (std::size_t i = 0; i < n_mels; ++i)
    for (std::size_t j = i; j < n_mels; ++j) {
      double acc = 0.0;
      for (std::size_t b = 0; b < n_bins; ++b)
        acc += static_cast<double>(fb[i][b]) * fb[j][b];
      gram[i][j] = acc;
      gram[j][i] = acc;
      if (i == j) trace += acc;
    }
  const double ridge = 1e-4 * trace / static_cast<double>(n_mels) + 1e-12;

  std::vector<std::vector<double>> magnitude(t_frames,
                                             std::vector<double>(n_bins, 0.0));
  for (std::size_t t = 0; t < t_frames; ++t) {
    std::vector<double> m(n_mels);
    for (std::size_t i = 0; i < n_mels; ++i)
      m[i] = std::exp(static_cast<double>(mel.frames[t][i]));
    std::vector<double> z = spd_solve(gram, m, ridge);
    for (std::size_t b = 0; b < n_bins; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n_mels; ++i)
        acc += static_cast<double>(fb[i][b]) * z[i];
      magnitude[t][b] = std::sqrt(std::max(acc, 0.0));
    }
  }

  const std::size_t length = static_cast<std::size_t>(cfg.win) +
                             (t_frames - 1) * static_cast<std::size_t>(cfg.hop);
  std::vector<std::vector<std::complex<double>>> spec(
      t_frames, std::vector<std::complex<double>>(n_bins));
  // Zero initial phase keeps the reconstruction deterministic.
  for (std::size_t t = 0; t < t_frames; ++t)
    for (std::size_t b = 0; b < n_bins; ++b)
      spec[t][b] = {magnitude[t][b], 0.0};

  std::vector<float> signal;
  for (int it = 0; it < iterations; ++it) {
    signal = istft(spec, cfg.win, cfg.hop, cfg.fft_size, length);
    auto re = stft(signal, cfg.win, cfg.hop, cfg.fft_size);
    for (std::size_t t = 0; t < t_frames && t < re.size(); ++t) {
      for (std::size_t b = 0; b < n_bins; ++b) {
        const double a = std::abs(re[t][b]);
        spec[t][b] = a > 1e-12 ? re[t][b] / a * magnitude[t][b]
                               : std::complex<double>(magnitude[t][b], 0.0);
      }
    }
  }
  signal = istft(spec, cfg.win, cfg.hop, cfg.fft_size, length);
  return Waveform::mono(std::move(signal), mel.sample_rate);
}

void save_converter(const ConverterModel& model, const std::string& path) {
  Checkpoint ckpt;
  Tensor meta(std::size_t(8));
  meta.data = {static_cast<float>(model.config.vocab_k),
               static_cast<float>(model.config.embed_dim),
               static_cast<float>(model.config.encoder_depth),
               static_cast<float>(model.config.decoder_depth),
               static_cast<float>(model.config.mel_bins),
               static_cast<float>(model.config.duration_hidden),
               static_cast<float>(model.config.speaker_dim),
               static_cast<float>(model.sample_rate)};
  ckpt.add("meta/converter", meta);
  Tensor fmeta(std::size_t(7));
  fmeta.data = {static_cast<float>(model.mel.n_mels), model.mel.f_min,
                model.mel.f_max, static_cast<float>(model.mel.hop),
                static_cast<float>(model.mel.win),
                static_cast<float>(model.mel.fft_size), model.mel.log_floor};
  ckpt.add("meta/frontend", fmeta);
  Tensor mean(model.mel_mean.size());
  mean.data = model.mel_mean;
  ckpt.add("meta/mel_mean", mean);
  Tensor sd(model.mel_std.size());
  sd.data = model.mel_std;
  ckpt.add("meta/mel_std", sd);
  for (auto& [name, t] : const_cast<ConverterModel&>(model).params.named()) {
    Tensor copy = *t;
    copy.grad.clear();
    ckpt.add(name, copy);
  }
  save_checkpoint(ckpt, path);
}

ConverterModel load_converter(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  const Tensor& meta = ckpt.require("meta/converter");
  if (meta.numel() != 8) throw DataError("converter: bad meta tensor");
  ConverterConfig cfg;
  cfg.vocab_k = static_cast<int>(meta.data[0]);
  cfg.embed_dim = static_cast<int>(meta.data[1]);
  cfg.encoder_depth = static_cast<int>(meta.data[2]);
  cfg.decoder_depth = static_cast<int>(meta.data[3]);
  cfg.mel_bins = static_cast<int>(meta.data[4]);
  cfg.duration_hidden = static_cast<int>(meta.data[5]);
  cfg.speaker_dim = static_cast<int>(meta.data[6]);
  MelConfig mel;
  const Tensor& fmeta = ckpt.require("meta/frontend");
  if (fmeta.numel() != 7) throw DataError("converter: bad frontend meta");
  mel.n_mels = static_cast<int>(fmeta.data[0]);
  mel.f_min = fmeta.data[1];
  mel.f_max = fmeta.data[2];
  mel.hop = static_cast<int>(fmeta.data[3]);
  mel.win = static_cast<int>(fmeta.data[4]);
  mel.fft_size = static_cast<int>(fmeta.data[5]);
  mel.log_floor = fmeta.data[6];

  ConverterModel model =
      build_converter(cfg, mel, static_cast<int>(meta.data[7]));
  model.mel_mean = ckpt.require("meta/mel_mean").data;
  model.mel_std = ckpt.require("meta/mel_std").data;
  for (auto& [name, t] : model.params.named()) *t = ckpt.require(name);
  return model;
}

UtteranceInputs load_utterance_inputs(const ManifestRecord& rec,
                                      const MelConfig& mel_cfg,
                                      int sample_rate,
                                      const std::string& base_dir) {
  UtteranceInputs out;
  MelSpectrogram mel;
  bool have_mel = false;
  if (!rec.audio.empty()) {
    Waveform w = to_mono(load_wav(resolve_path(base_dir, rec.audio)));
    if (w.sample_rate != sample_rate) w = resample(w, sample_rate);
    mel = log_mel_spectrogram(w, mel_cfg);
    have_mel = true;
    out.mel = mel_frames_tensor(mel);
  }
  if (rec.features) {
    out.feats = load_features(resolve_path(base_dir, *rec.features));
  } else if (have_mel) {
    out.feats.source = FeatureSource::kInternalMel;
    out.feats.frames = mel.frames;
  } else {
    throw DataError("record '" + rec.id + "' has neither features nor audio");
  }
  if (rec.embedding) {
    out.speaker = load_embedding(resolve_path(base_dir, *rec.embedding));
  } else if (have_mel) {
    out.speaker = fallback_speaker_embedding(mel);
  } else {
    throw DataError("record '" + rec.id +
                    "' has neither speaker embedding nor audio");
  }
  return out;
}

std::vector<ConverterExample> prepare_converter_examples(
    const DatasetManifest& manifest, Split split, const Codebook& cb,
    const MelConfig& mel_cfg, int sample_rate, const std::string& base_dir) {
  std::vector<ConverterExample> out;
  for (const auto* rec : manifest.split_records(split)) {
    UtteranceInputs in =
        load_utterance_inputs(*rec, mel_cfg, sample_rate, base_dir);
    if (in.mel.numel() == 0)
      throw DataError("converter: record '" + rec->id +
                      "' needs audio for a mel target");
    ConverterExample ex;
    ex.id = rec->id;
    ex.units = dedup_runs(quantize(cb, in.feats));
    ex.speaker = in.speaker;
    if (rec->ratings_pred) {
      ex.rating.values = *rec->ratings_pred;
    } else if (rec->ratings) {
      ex.rating.values = *rec->ratings;
    } else {
      throw DataError("converter: record '" + rec->id +
                      "' has no predicted or given ratings");
    }
    // Internal-mel features are aligned with the target by construction;
    // external features are matched by nearest-index resampling in time.
    const std::size_t t_feat = in.feats.num_frames();
    if (in.mel.rows() == t_feat) {
      ex.mel_target = in.mel;
    } else {
      Tensor aligned(t_feat, in.mel.cols());
      for (std::size_t t = 0; t < t_feat; ++t) {
        std::size_t src =
            t_feat > 1 ? (t * (in.mel.rows() - 1)) / (t_feat - 1) : 0;
        std::copy(in.mel.row_ptr(src), in.mel.row_ptr(src) + in.mel.cols(),
                  aligned.row_ptr(t));
      }
      ex.mel_target = std::move(aligned);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace voicelike
