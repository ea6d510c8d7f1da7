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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "test_util.hpp"
#include "voicelike/common.hpp"
#include "voicelike/converter.hpp"

using namespace voicelike;

namespace {

ConverterConfig tiny_config() {
  ConverterConfig cfg;
  cfg.vocab_k = 6;
  cfg.embed_dim = 8;
  cfg.encoder_depth = 1;
  cfg.decoder_depth = 1;
  cfg.mel_bins = 5;
  cfg.duration_hidden = 4;
  cfg.speaker_dim = 3;
  cfg.seed = 3;
  return cfg;
}

SpeakerEmbedding spk3(float a, float b, float c) {
  SpeakerEmbedding e;
  e.values = {a, b, c};
  return e;
}

ConditioningInput make_input(float s, float target_value = 0.5f) {
  ConditioningInput inp;
  inp.units.ids = {0, 3, 2, 5};
  inp.units.run_lengths = {2, 1, 3, 1};
  inp.speaker = spk3(0.3f, -0.2f, 0.9f);
  inp.target.values = {target_value, target_value, target_value, target_value};
  inp.s = s;
  return inp;
}

// Tiny deterministic training set over the toy model's unit vocabulary.
std::vector<ConverterExample> toy_examples(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> id_dist(0, 5), run_dist(1, 3);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<ConverterExample> out;
  for (int i = 0; i < n; ++i) {
    ConverterExample ex;
    ex.id = "toy" + std::to_string(i);
    const int n_tokens = 3 + (i % 3);
    int prev = -1;
    std::size_t total = 0;
    for (int t = 0; t < n_tokens; ++t) {
      int id = id_dist(rng);
      if (id == prev) id = (id + 1) % 6;
      prev = id;
      ex.units.ids.push_back(id);
      int run = run_dist(rng);
      ex.units.run_lengths.push_back(run);
      total += static_cast<std::size_t>(run);
    }
    ex.speaker = spk3(u(rng), u(rng), u(rng));
    for (auto& v : ex.rating.values) v = u(rng);
    ex.mel_target = Tensor(total, std::size_t(5));
    // mel rows depend deterministically on the unit id so memorization works
    std::size_t row = 0;
    for (std::size_t t = 0; t < ex.units.ids.size(); ++t) {
      for (int r = 0; r < ex.units.run_lengths[t]; ++r, ++row) {
        for (std::size_t c = 0; c < 5; ++c)
          ex.mel_target.at(row, c) =
              0.5f * static_cast<float>(ex.units.ids[t]) -
              0.3f * static_cast<float>(c) + 0.1f * ex.rating.values[0];
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

TEST_CASE("build_converter shapes") {
  ConverterModel m = build_converter(tiny_config());
  CHECK(m.params.token_embedding.dims == std::vector<std::size_t>{6, 8});
  CHECK(m.params.speaker_proj.dims == std::vector<std::size_t>{3, 8});
  CHECK(m.params.rating_proj.dims == std::vector<std::size_t>{4, 8});
  REQUIRE(m.params.encoder.size() == 1);
  CHECK(m.params.encoder[0].w1.dims == std::vector<std::size_t>{24, 8});
  CHECK(m.params.dur_w2.dims == std::vector<std::size_t>{4, 1});
  CHECK(m.params.mel_w.dims == std::vector<std::size_t>{8, 5});

  ConverterModel m2 = build_converter(tiny_config());
  CHECK(m.params.token_embedding.data == m2.params.token_embedding.data);
}

TEST_CASE("conditioning gate: s = 0 erases the target dependence") {
  ConverterModel m = build_converter(tiny_config());
  ConditioningInput a = make_input(0.0f, -2.0f);
  ConditioningInput b = make_input(0.0f, 2.0f);
  CHECK(condition_preencoder(m, a).data == condition_preencoder(m, b).data);
  CHECK(condition(m, a).data == condition(m, b).data);
}

TEST_CASE("conditioning is exactly linear in s on the rating path") {
  ConverterModel m = build_converter(tiny_config());
  // zero token and speaker contributions isolate the s * proj_rate term
  for (auto& v : m.params.token_embedding.data) v = 0.0f;
  for (auto& v : m.params.speaker_proj.data) v = 0.0f;

  SUBCASE("doubling s doubles the term bit for bit") {
    Tensor h1 = condition_preencoder(m, make_input(1.0f));
    Tensor h2 = condition_preencoder(m, make_input(2.0f));
    REQUIRE(h1.data.size() == h2.data.size());
    for (std::size_t i = 0; i < h1.data.size(); ++i)
      CHECK(h2.data[i] == 2.0f * h1.data[i]);
  }
  SUBCASE("hidden(a) - hidden(0) == a * (hidden(1) - hidden(0)) bitwise") {
    for (float a : {0.5f, 1.0f, 2.5f, -1.5f, 3.0f}) {
      Tensor h0 = condition_preencoder(m, make_input(0.0f));
      Tensor h1 = condition_preencoder(m, make_input(1.0f));
      Tensor ha = condition_preencoder(m, make_input(a));
      for (std::size_t i = 0; i < ha.data.size(); ++i) {
        const float lhs = ha.data[i] - h0.data[i];
        const float rhs = a * (h1.data[i] - h0.data[i]);
        CHECK(lhs == rhs);
      }
    }
  }
}

TEST_CASE("conditioning linearity holds to float precision with a full base") {
  ConverterModel m = build_converter(tiny_config());
  for (float a : {0.5f, 2.5f, -1.0f}) {
    Tensor h0 = condition_preencoder(m, make_input(0.0f));
    Tensor h1 = condition_preencoder(m, make_input(1.0f));
    Tensor ha = condition_preencoder(m, make_input(a));
    for (std::size_t i = 0; i < ha.data.size(); ++i) {
      const double lhs = static_cast<double>(ha.data[i]) - h0.data[i];
      const double rhs = static_cast<double>(a) *
                         (static_cast<double>(h1.data[i]) - h0.data[i]);
      CHECK(std::fabs(lhs - rhs) <= 1e-6 * std::max(1.0, std::fabs(rhs)));
    }
  }
}

TEST_CASE("single token with zero projections returns its embedding row") {
  ConverterModel m = build_converter(tiny_config());
  for (auto& v : m.params.speaker_proj.data) v = 0.0f;
  for (auto& v : m.params.rating_proj.data) v = 0.0f;
  ConditioningInput inp = make_input(1.0f);
  inp.units.ids = {4};
  inp.units.run_lengths = {1};
  Tensor h = condition_preencoder(m, inp);
  REQUIRE(h.rows() == 1);
  for (std::size_t c = 0; c < 8; ++c)
    CHECK(h.at(0, c) == m.params.token_embedding.at(4, c));
}

TEST_CASE("conditioning input validation") {
  ConverterModel m = build_converter(tiny_config());
  ConditioningInput inp = make_input(1.0f);
  SUBCASE("empty units") {
    inp.units.ids.clear();
    CHECK_THROWS_AS(condition(m, inp), DataError);
  }
  SUBCASE("id out of range") {
    inp.units.ids = {0, 99};
    CHECK_THROWS_AS(condition(m, inp), DataError);
  }
  SUBCASE("speaker dimension mismatch") {
    inp.speaker.values = {1.0f};
    CHECK_THROWS_AS(condition(m, inp), DataError);
  }
  SUBCASE("non-finite scale") {
    inp.s = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(condition(m, inp), DataError);
  }
}

TEST_CASE("predict_durations") {
  ConverterModel m = build_converter(tiny_config());
  SUBCASE("zero duration head emits one frame per token") {
    for (auto& v : m.params.dur_w1.data) v = 0.0f;
    for (auto& v : m.params.dur_b1.data) v = 0.0f;
    for (auto& v : m.params.dur_w2.data) v = 0.0f;
    for (auto& v : m.params.dur_b2.data) v = 0.0f;
    Tensor enc = condition(m, make_input(1.0f));
    std::vector<int> d = predict_durations(m, enc);
    REQUIRE(d.size() == 4);
    for (int v : d) CHECK(v == 1);
  }
  SUBCASE("durations are always at least one frame") {
    Tensor enc = condition(m, make_input(1.0f));
    for (int v : predict_durations(m, enc)) CHECK(v >= 1);
  }
}

TEST_CASE("length_regulate") {
  Tensor h(4, 3);
  for (std::size_t i = 0; i < h.numel(); ++i)
    h.data[i] = static_cast<float>(i);
  SUBCASE("all ones is the identity") {
    Tensor out = length_regulate(h, {1, 1, 1, 1});
    CHECK(out.data == h.data);
  }
  SUBCASE("the worked run structure expands to six frames") {
    Tensor out = length_regulate(h, {1, 2, 2, 1});
    CHECK(out.rows() == 6);
    CHECK(std::vector<float>(out.row_ptr(1), out.row_ptr(1) + 3) ==
          std::vector<float>(out.row_ptr(2), out.row_ptr(2) + 3));
  }
  SUBCASE("total length is the duration sum on random input") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> d(1, 5);
    std::vector<int> durations(4);
    int total = 0;
    for (auto& v : durations) {
      v = d(rng);
      total += v;
    }
    CHECK(length_regulate(h, durations).rows() ==
          static_cast<std::size_t>(total));
  }
  SUBCASE("misalignment and nonpositive durations are rejected") {
    CHECK_THROWS_AS(length_regulate(h, {1, 1}), DataError);
    CHECK_THROWS_AS(length_regulate(h, {1, 0, 1, 1}), DataError);
  }
}

TEST_CASE("decode_mel") {
  ConverterModel m = build_converter(tiny_config());
  Tensor frames(7, 8);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (auto& v : frames.data) v = u(rng);

  SUBCASE("output shape is sum-durations by mel_bins") {
    MelSpectrogram mel = decode_mel(m, frames);
    CHECK(mel.num_frames() == 7);
    CHECK(mel.num_bins() == 5);
  }
  SUBCASE("zero parameters produce constant bias frames") {
    for (auto* t : m.params.all())
      for (auto& v : t->data) v = 0.0f;
    m.params.mel_b.data = {0.1f, 0.2f, 0.3f, 0.4f, 0.5f};
    m.mel_mean.assign(5, 0.0f);
    m.mel_std.assign(5, 1.0f);
    MelSpectrogram mel = decode_mel(m, frames);
    for (const auto& f : mel.frames)
      for (std::size_t c = 0; c < 5; ++c)
        CHECK(f[c] == doctest::Approx(0.1f * static_cast<float>(c + 1)));
  }
  SUBCASE("outputs never drop below the log floor") {
    m.mel_mean.assign(5, -30.0f);  // push raw outputs under the floor
    MelSpectrogram mel = decode_mel(m, frames);
    const float floor_val = std::log(m.mel.log_floor);
    for (const auto& f : mel.frames)
      for (float v : f) CHECK(v >= floor_val);
  }
}

TEST_CASE("converter gradients match finite differences") {
  ConverterConfig cfg = tiny_config();
  ConverterModel m = build_converter(cfg);
  auto dp = m.params.cast<double>();
  std::vector<int> ids{0, 3, 2, 5};
  std::vector<int> runs{2, 1, 3, 1};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  TensorD spk(std::size_t(1), std::size_t(3));
  TensorD rate(std::size_t(1), std::size_t(4));
  TensorD mel_target(std::size_t(7), std::size_t(5));
  TensorD dur_target(std::size_t(4), std::size_t(1));
  for (auto& v : spk.data) v = u(rng);
  for (auto& v : rate.data) v = u(rng);
  for (auto& v : mel_target.data) v = u(rng);
  for (auto& v : dur_target.data) v = u(rng);

  std::vector<TensorD*> params = dp.all();
  auto build = [&](Tape<double>& t) {
    ConverterGraph<double> graph(t, dp, nullptr, /*own_grads=*/true);
    auto pre = graph.preencoder(ids, spk, rate, 1.0);
    auto enc = graph.encode(pre);
    auto logd = graph.log_durations(enc);
    auto frames = t.repeat_rows(enc, runs);
    auto mel = graph.decode(frames);
    return t.add(t.mse(mel, t.constant(mel_target)),
                 t.mse(logd, t.constant(dur_target)));
  };
  auto res = fd_check(params, build, 1e-4);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("train_converter") {
  auto data = toy_examples(4, 31);
  ConverterTrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 2;
  tc.seed = 31;

  SUBCASE("lr = 0 leaves parameters unchanged") {
    ConverterModel m = build_converter(tiny_config());
    ConverterModel before = m;
    ConverterTrainConfig zero = tc;
    zero.epochs = 1;
    zero.adam.lr = 0.0f;
    train_converter(m, data, zero);
    auto a = before.params.all();
    auto b = m.params.all();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->data == b[i]->data);
  }
  SUBCASE("deterministic under the same seed") {
    ConverterModel m1 = build_converter(tiny_config());
    ConverterModel m2 = build_converter(tiny_config());
    auto s1 = train_converter(m1, data, tc);
    auto s2 = train_converter(m2, data, tc);
    CHECK(s1.epoch_loss == s2.epoch_loss);
    CHECK(m1.params.mel_w.data == m2.params.mel_w.data);
  }
  SUBCASE("duplicated data with halved epochs matches, without shuffling") {
    ConverterTrainConfig seq = tc;
    seq.shuffle = false;
    seq.epochs = 6;
    ConverterModel m1 = build_converter(tiny_config());
    train_converter(m1, data, seq);

    std::vector<ConverterExample> doubled = data;
    doubled.insert(doubled.end(), data.begin(), data.end());
    ConverterTrainConfig half = seq;
    half.epochs = 3;
    ConverterModel m2 = build_converter(tiny_config());
    train_converter(m2, doubled, half);
    auto a = m1.params.all();
    auto b = m2.params.all();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->data == b[i]->data);
  }
  SUBCASE("misaligned targets are rejected") {
    auto broken = data;
    broken[0].mel_target = Tensor(std::size_t(2), std::size_t(5));
    ConverterModel m = build_converter(tiny_config());
    CHECK_THROWS_AS(train_converter(m, broken, tc), DataError);
  }
  SUBCASE("a longer run memorizes the toy set") {
    ConverterModel m = build_converter(tiny_config());
    ConverterTrainConfig longer = tc;
    longer.epochs = 300;
    longer.batch_size = 4;
    longer.adam.lr = 3e-3f;
    auto stats = train_converter(m, data, longer);
    CHECK(stats.final_mel_mse < 0.05);
    CHECK(stats.final_duration_mae <= 1.0);
    CHECK(stats.epoch_loss.back() < stats.epoch_loss.front());
  }
}

TEST_CASE("convert wires quantize -> dedup -> condition -> decode") {
  ConverterModel m = build_converter(tiny_config());
  Codebook cb;
  cb.centroids = {{0.0f, 0.0f}, {1.0f, 0.0f}, {0.0f, 1.0f},
                  {1.0f, 1.0f}, {2.0f, 0.0f}, {0.0f, 2.0f}};
  cb.counts.assign(6, 1);
  // model features are 2-D here; only the codebook size must match the vocab
  FeatureSequence feats;
  feats.frames = {{0.0f, 0.0f}, {0.0f, 0.0f}, {1.0f, 0.0f}, {2.0f, 0.0f}};
  SpeakerEmbedding spk = spk3(0.1f, 0.2f, 0.3f);
  LikabilityRating target;
  target.values = {1.0f, 1.0f, 1.0f, 1.0f};

  SUBCASE("s = 0 gives bit-identical mels across targets") {
    LikabilityRating other;
    other.values = {-2.0f, -2.0f, -2.0f, -2.0f};
    MelSpectrogram a = convert(m, feats, cb, spk, target, 0.0f);
    MelSpectrogram b = convert(m, feats, cb, spk, other, 0.0f);
    REQUIRE(a.num_frames() == b.num_frames());
    for (std::size_t t = 0; t < a.num_frames(); ++t)
      CHECK(a.frames[t] == b.frames[t]);
  }
  SUBCASE("forced durations control the frame count exactly") {
    std::vector<int> forced{2, 3, 4};  // deduped tokens: 0, 1, 4
    MelSpectrogram mel = convert(m, feats, cb, spk, target, 1.0f, &forced);
    CHECK(mel.num_frames() == 9);
  }
  SUBCASE("codebook size must match the vocab") {
    Codebook small;
    small.centroids = {{0.0f, 0.0f}};
    small.counts = {1};
    CHECK_THROWS_AS(convert(m, feats, small, spk, target, 1.0f), DataError);
  }
  SUBCASE("a target sweep produces valid shapes at every value") {
    for (float t = -2.0f; t <= 2.01f; t += 0.5f) {
      LikabilityRating tv;
      tv.values = {t, t, t, t};
      MelSpectrogram mel = convert(m, feats, cb, spk, tv, 2.5f);
      CHECK(mel.num_frames() >= 3);
      CHECK(mel.num_bins() == 5);
    }
  }
}

TEST_CASE("speaker embedding changes the output") {
  ConverterModel m = build_converter(tiny_config());
  ConditioningInput a = make_input(1.0f);
  ConditioningInput b = make_input(1.0f);
  b.speaker = spk3(-0.8f, 0.4f, 0.2f);
  Tensor ha = condition(m, a);
  Tensor hb = condition(m, b);
  double diff = 0.0;
  for (std::size_t i = 0; i < ha.data.size(); ++i)
    diff += std::fabs(static_cast<double>(ha.data[i]) - hb.data[i]);
  CHECK(diff > 1e-6);
}

TEST_CASE("embedding file round trip and validation") {
  testutil::TempDir dir("emb");
  SpeakerEmbedding e;
  e.values = {0.25f, -0.5f, 1.5f};
  const std::string path = dir.file("spk.lkbe");
  save_embedding(e, path);
  SpeakerEmbedding back = load_embedding(path);
  CHECK(back.values == e.values);

  SpeakerEmbedding zero;
  zero.values = {0.0f, 0.0f};
  const std::string zpath = dir.file("zero.lkbe");
  save_embedding(zero, zpath);
  CHECK_THROWS_AS(load_embedding(zpath), DataError);
}

TEST_CASE("fallback speaker embedding is mel statistics") {
  MelSpectrogram mel;
  mel.config.n_mels = 3;
  mel.sample_rate = 8000;
  mel.frames = {{1.0f, 2.0f, 3.0f}, {3.0f, 4.0f, 5.0f}};
  SpeakerEmbedding e = fallback_speaker_embedding(mel);
  REQUIRE(e.values.size() == 6);
  CHECK(e.values[0] == doctest::Approx(2.0f));
  CHECK(e.values[1] == doctest::Approx(3.0f));
  CHECK(e.values[2] == doctest::Approx(4.0f));
  CHECK(e.values[3] == doctest::Approx(1.0f));  // population std
  CHECK(e.values[4] == doctest::Approx(1.0f));
  CHECK(e.values[5] == doctest::Approx(1.0f));
}

TEST_CASE("converter checkpoint round trip") {
  testutil::TempDir dir("conv_ckpt");
  ConverterModel m = build_converter(tiny_config());
  m.mel_mean.assign(5, 1.5f);
  m.mel_std.assign(5, 0.7f);
  const std::string path = dir.file("converter.lkbl");
  save_converter(m, path);
  ConverterModel back = load_converter(path);
  CHECK(back.config.vocab_k == 6);
  CHECK(back.config.embed_dim == 8);
  CHECK(back.config.speaker_dim == 3);
  CHECK(back.mel_mean == m.mel_mean);
  CHECK(back.mel_std == m.mel_std);
  auto a = m.params.all();
  auto b = back.params.all();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->data == b[i]->data);
}

TEST_CASE("griffin-lim reconstructs a sine's dominant frequency") {
  MelConfig cfg;
  cfg.n_mels = 40;
  cfg.f_min = 0.0f;
  cfg.f_max = 3800.0f;
  cfg.hop = 64;
  cfg.win = 256;
  cfg.fft_size = 256;
  const int rate = 8000;
  const double freq = 500.0;
  Waveform sine = Waveform::mono(testutil::sine(freq, rate, 4096, 0.6), rate);
  MelSpectrogram mel = log_mel_spectrogram(sine, cfg);
  Waveform rec = griffin_lim_vocoder(mel, 40);
  REQUIRE(rec.length() > 1024);

  auto spec = stft(rec.samples(), 256, 64, 256);
  std::vector<double> power(129, 0.0);
  for (const auto& frame : spec)
    for (std::size_t b = 0; b < 129; ++b) power[b] += std::norm(frame[b]);
  std::size_t peak = 0;
  for (std::size_t b = 1; b < 129; ++b)
    if (power[b] > power[peak]) peak = b;
  const double bin_hz = static_cast<double>(rate) / 256.0;
  CHECK(std::fabs(static_cast<double>(peak) * bin_hz - freq) <= bin_hz);

  SUBCASE("deterministic") {
    Waveform rec2 = griffin_lim_vocoder(mel, 40);
    CHECK(rec.samples() == rec2.samples());
  }
}

TEST_CASE("griffin-lim of a floor mel is near silence") {
  MelConfig cfg;
  cfg.n_mels = 40;
  cfg.f_max = 3800.0f;
  cfg.hop = 64;
  cfg.win = 256;
  cfg.fft_size = 256;
  MelSpectrogram mel;
  mel.config = cfg;
  mel.sample_rate = 8000;
  mel.frames.assign(20, std::vector<float>(40, std::log(1e-10f)));
  Waveform out = griffin_lim_vocoder(mel, 10);
  float peak = 0.0f;
  for (float v : out.samples()) peak = std::max(peak, std::abs(v));
  CHECK(peak < 0.01f);
}
