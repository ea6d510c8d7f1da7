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
#include <fstream>
#include <random>
#include <sstream>

#include "test_util.hpp"
#include "voicelike/common.hpp"
#include "voicelike/evalharness.hpp"

using namespace voicelike;

namespace {

std::vector<LabeledEmbedding> gaussian_speaker_cluster(
    const std::string& speaker, const std::vector<float>& center, int count,
    float sigma, std::uint64_t seed, float target = 0.0f) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, sigma);
  std::vector<LabeledEmbedding> out;
  for (int i = 0; i < count; ++i) {
    LabeledEmbedding e;
    e.id = speaker + "_" + std::to_string(i);
    e.speaker = speaker;
    e.target = target;
    e.values = center;
    for (auto& v : e.values) v += g(rng);
    out.push_back(std::move(e));
  }
  return out;
}

std::size_t csv_line_count(const std::string& path) {
  std::ifstream is(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("predictor report from identical pairs") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<LikabilityRating> targets(12);
  for (auto& t : targets)
    for (auto& v : t.values) v = u(rng);
  PredictorReport r = predictor_report_from_pairs(targets, targets);
  REQUIRE(r.rows.size() == 5);
  for (const auto& row : r.rows) {
    CHECK(row.mse == doctest::Approx(0.0));
    CHECK(row.lcc == doctest::Approx(1.0));
    CHECK(row.srcc == doctest::Approx(1.0));
    CHECK(row.ktau == doctest::Approx(1.0));
    CHECK(row.pred_std == doctest::Approx(row.gt_std));
  }
  CHECK(r.accuracy == 1.0);
  CHECK(r.rows[4].name == "all");
}

TEST_CASE("predictor report column set matches the documented table") {
  std::vector<LikabilityRating> p(3), t(3);
  p[0].values = {0.1f, 0.2f, 0.3f, 0.4f};
  p[1].values = {-0.1f, 0.0f, 0.1f, 0.2f};
  p[2].values = {0.5f, -0.5f, 0.2f, -0.2f};
  t = p;
  PredictorReport r = predictor_report_from_pairs(p, t);
  Table table = r.to_table();
  CHECK(table.header == std::vector<std::string>{"listeners", "mse", "std",
                                                 "lcc", "srcc", "ktau",
                                                 "gt_std"});
  CHECK(table.rows.size() == 5);
}

TEST_CASE("report correlations are invariant under calibration") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<LikabilityRating> preds(20), targets(20);
  for (auto& x : preds)
    for (auto& v : x.values) v = u(rng);
  for (auto& x : targets)
    for (auto& v : x.values) v = u(rng);
  CalibrationParams calib = fit_calibration(preds, targets);
  std::vector<LikabilityRating> calibrated;
  for (const auto& p : preds) calibrated.push_back(apply_calibration(calib, p));

  PredictorReport raw = predictor_report_from_pairs(preds, targets);
  PredictorReport cal = predictor_report_from_pairs(calibrated, targets);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(raw.rows[i].srcc == cal.rows[i].srcc);
    CHECK(raw.rows[i].ktau == cal.rows[i].ktau);
    CHECK(raw.rows[i].lcc == doctest::Approx(cal.rows[i].lcc).epsilon(1e-9));
  }
}

TEST_CASE("speaker similarity on synthetic gaussian clusters") {
  std::vector<float> c1(16, 0.0f), c2(16, 0.0f), c3(16, 0.0f);
  c1[0] = 4.0f;
  c2[1] = 4.0f;
  c3[2] = 4.0f;
  std::vector<LabeledEmbedding> refs;
  for (const auto& [name, ctr] :
       std::vector<std::pair<std::string, std::vector<float>>>{
           {"spk_a", c1}, {"spk_b", c2}, {"spk_c", c3}}) {
    auto cluster = gaussian_speaker_cluster(name, ctr, 20, 0.3f,
                                            std::hash<std::string>{}(name));
    refs.insert(refs.end(), cluster.begin(), cluster.end());
  }

  SUBCASE("conversion at the centroid passes with similarity 1") {
    LabeledEmbedding conv;
    conv.id = "conv0";
    conv.speaker = "spk_a";
    conv.values = std::vector<float>(16, 0.0f);
    // exact centroid of spk_a's references
    std::size_t n = 0;
    for (const auto& r : refs)
      if (r.speaker == "spk_a") {
        for (std::size_t i = 0; i < 16; ++i) conv.values[i] += r.values[i];
        ++n;
      }
    for (auto& v : conv.values) v /= static_cast<float>(n);
    SimilarityReport rep = speaker_similarity_eval(refs, {conv});
    REQUIRE(rep.cells.size() == 1);
    CHECK(rep.cells[0].similarity == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rep.cells[0].pass);
  }
  SUBCASE("well-separated clusters give a tiny EER") {
    auto convs = gaussian_speaker_cluster("spk_b", c2, 10, 0.3f, 99, 1.5f);
    SimilarityReport rep = speaker_similarity_eval(refs, convs);
    CHECK(rep.eer < 0.05);
    for (const auto& cell : rep.cells) CHECK(cell.pass);
    CHECK(rep.reference_threshold == doctest::Approx(0.48f));
  }
  SUBCASE("unknown conversion speaker is rejected") {
    LabeledEmbedding conv;
    conv.id = "x";
    conv.speaker = "spk_zz";
    conv.values = c1;
    CHECK_THROWS_AS(speaker_similarity_eval(refs, {conv}), DataError);
  }
  SUBCASE("one speaker only is rejected") {
    auto only = gaussian_speaker_cluster("solo", c1, 5, 0.1f, 1);
    CHECK_THROWS_AS(speaker_similarity_eval(only, {}), DataError);
  }
}

TEST_CASE("emit_report CSV shape") {
  testutil::TempDir dir("reports");
  SweepReport r;
  r.meta = {42, "0123456789abcdef"};
  r.targets = {-1.0f, 0.0f, 1.0f};
  r.aggregate_mean = {0.1f, 0.2f, 0.3f};

  SUBCASE("empty report still writes the header (plus aggregate rows)") {
    SweepReport empty;
    empty.meta = r.meta;
    const std::string path = dir.file("empty.csv");
    emit_report(empty, path, ReportFormat::kCsv);
    CHECK(csv_line_count(path) == 1);  // header only
  }
  SUBCASE("row count is records plus one header") {
    for (int i = 0; i < 4; ++i) {
      SweepCell cell;
      cell.id = "utt" + std::to_string(i);
      cell.target = 0.0f;
      cell.mean = 0.5f;
      r.cells.push_back(cell);
    }
    const std::string path = dir.file("sweep.csv");
    emit_report(r, path, ReportFormat::kCsv);
    // 4 cells + 3 aggregate rows + 1 header
    CHECK(csv_line_count(path) == r.cells.size() + r.targets.size() + 1);
  }
}

TEST_CASE("report JSON round trips preserve structure") {
  SweepReport r;
  r.meta = {7, "deadbeefdeadbeef"};
  r.targets = {-0.5f, 0.5f};
  r.aggregate_mean = {0.25f, 0.75f};
  SweepCell cell;
  cell.id = "utt0";
  cell.target = -0.5f;
  cell.pred = {0.1f, 0.2f, 0.3f, 0.4f};
  cell.mean = 0.25f;
  r.cells.push_back(cell);

  SweepReport back = sweep_report_from_json(sweep_report_to_json(r));
  CHECK(back.meta.seed == r.meta.seed);
  CHECK(back.meta.config_hash == r.meta.config_hash);
  CHECK(back.targets == r.targets);
  CHECK(back.aggregate_mean == r.aggregate_mean);
  REQUIRE(back.cells.size() == 1);
  CHECK(back.cells[0].id == "utt0");
  CHECK(back.cells[0].pred == cell.pred);

  SimilarityReport s;
  s.meta = r.meta;
  s.eer = 0.125;
  s.threshold = 0.61;
  SimilarityCell sc;
  sc.id = "c0";
  sc.speaker = "spk";
  sc.similarity = 0.9;
  sc.pass = true;
  s.cells.push_back(sc);
  SimilarityReport sback =
      similarity_report_from_json(similarity_report_to_json(s));
  CHECK(sback.eer == s.eer);
  CHECK(sback.threshold == s.threshold);
  CHECK(sback.cells[0].pass);

  ContentReport c;
  c.meta = r.meta;
  c.targets = {0.0f};
  c.aggregate_cer = {0.5};
  ContentCell cc;
  cc.id = "u";
  cc.target = 0.0f;
  cc.cer = 0.5;
  c.cells.push_back(cc);
  ContentReport cback = content_report_from_json(content_report_to_json(c));
  CHECK(cback.aggregate_cer == c.aggregate_cer);

  std::vector<LikabilityRating> p(3), t(3);
  p[0].values = {0.3f, 0.1f, 0.2f, 0.4f};
  p[1].values = {-0.3f, -0.1f, 0.0f, 0.1f};
  p[2].values = {0.6f, 0.5f, 0.4f, 0.3f};
  t[0].values = {0.2f, 0.0f, 0.1f, 0.5f};
  t[1].values = {-0.2f, -0.2f, 0.1f, 0.0f};
  t[2].values = {0.5f, 0.6f, 0.3f, 0.2f};
  PredictorReport pr = predictor_report_from_pairs(p, t, r.meta);
  PredictorReport pback =
      predictor_report_from_json(predictor_report_to_json(pr));
  CHECK(pback.rows.size() == pr.rows.size());
  CHECK(pback.accuracy == pr.accuracy);
  CHECK(pback.rows[2].srcc == doctest::Approx(pr.rows[2].srcc));
}

TEST_CASE("report filenames embed seed and config hash") {
  ReportMeta meta{123, "abcdef0123456789"};
  CHECK(report_filename("sweep", meta, "csv") == "sweep_123_abcdef01.csv");
}

TEST_CASE("default target grid spans -2..2 in 0.5 steps") {
  auto grid = default_target_grid();
  REQUIRE(grid.size() == 9);
  CHECK(grid.front() == doctest::Approx(-2.0f));
  CHECK(grid.back() == doctest::Approx(2.0f));
}

TEST_CASE("likability sweep with an s = 0 converter is flat per utterance") {
  // tiny matched front ends
  MelConfig mel;
  mel.n_mels = 8;
  mel.f_max = 3800.0f;
  mel.hop = 64;
  mel.win = 256;
  mel.fft_size = 256;

  ConverterConfig cc;
  cc.vocab_k = 4;
  cc.embed_dim = 8;
  cc.encoder_depth = 1;
  cc.decoder_depth = 1;
  cc.mel_bins = 8;
  cc.duration_hidden = 4;
  cc.speaker_dim = 16;
  cc.seed = 2;
  ConverterModel converter = build_converter(cc, mel, 8000);

  PredictorModel predictor = build_model(3, mel, 8000);

  Codebook cb;
  cb.centroids.assign(4, std::vector<float>(8, 0.0f));
  for (int i = 0; i < 4; ++i) cb.centroids[static_cast<std::size_t>(i)][0] =
      static_cast<float>(i);
  cb.counts.assign(4, 1);

  std::vector<EvalUtterance> items(2);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(0.0f, 3.0f);
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i].id = "utt" + std::to_string(i);
    items[i].speaker = "spk";
    items[i].feats.frames.assign(24, std::vector<float>(8, 0.0f));
    for (auto& f : items[i].feats.frames) f[0] = std::round(u(rng));
    items[i].speaker_emb.values.assign(16, 0.5f);
    items[i].source_units = dedup_runs(quantize(cb, items[i].feats));
  }

  auto targets = default_target_grid();
  SweepReport rep = likability_sweep(converter, cb, predictor, {}, items,
                                     targets, 0.0f, {11, "hash"});
  REQUIRE(rep.cells.size() == items.size() * targets.size());
  // s = 0: within one utterance every target yields the identical prediction
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double first = rep.cells[i * targets.size()].mean;
    for (std::size_t t = 1; t < targets.size(); ++t)
      CHECK(rep.cells[i * targets.size() + t].mean == first);
  }

  SUBCASE("content proxy runs over the same grid") {
    ContentReport crep = content_proxy_eval(converter, cb, items, targets,
                                            0.0f, {11, "hash"});
    CHECK(crep.cells.size() == items.size() * targets.size());
    for (const auto& cell : crep.cells) {
      CHECK(cell.cer >= 0.0);
      CHECK(std::isfinite(cell.cer));
    }
    CHECK(crep.aggregate_cer.size() == targets.size());
  }

  SUBCASE("mismatched front ends are rejected") {
    PredictorModel other = build_model(3, mel, 16000);
    CHECK_THROWS_AS(likability_sweep(converter, cb, other, {}, items, targets,
                                     0.0f, {11, "hash"}),
                    ConfigError);
  }
}
