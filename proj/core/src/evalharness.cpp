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

#include "voicelike/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "voicelike/common.hpp"

namespace voicelike {

using nlohmann::json;

std::vector<float> default_target_grid() {
  std::vector<float> targets;
  for (int i = -4; i <= 4; ++i) targets.push_back(0.5f * static_cast<float>(i));
  return targets;
}

std::vector<EvalUtterance> prepare_eval_utterances(
    const DatasetManifest& manifest, Split split, const Codebook& cb,
    const MelConfig& mel_cfg, int sample_rate, const std::string& base_dir) {
  std::vector<EvalUtterance> out;
  for (const auto* rec : manifest.split_records(split)) {
    UtteranceInputs in =
        load_utterance_inputs(*rec, mel_cfg, sample_rate, base_dir);
    EvalUtterance u;
    u.id = rec->id;
    u.speaker = rec->speaker;
    u.feats = std::move(in.feats);
    u.speaker_emb = std::move(in.speaker);
    u.source_units = dedup_runs(quantize(cb, u.feats));
    out.push_back(std::move(u));
  }
  return out;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

void check_compatible(const ConverterModel& converter,
                      const PredictorModel& predictor) {
  const MelConfig& a = converter.mel;
  const MelConfig& b = predictor.mel;
  const bool same = a.n_mels == b.n_mels && a.f_min == b.f_min &&
                    a.f_max == b.f_max && a.hop == b.hop && a.win == b.win &&
                    a.fft_size == b.fft_size &&
                    converter.sample_rate == predictor.sample_rate;
  if (!same)
    throw ConfigError(
        "evaluate: converter and predictor mel front ends are incompatible");
}

// Conversions shorter than the predictor's minimum context are tiled
// cyclically; the pooled statistics the predictor sees stay representative.
MelSpectrogram tile_to_min_frames(MelSpectrogram mel, std::size_t min_frames) {
  const std::size_t orig = mel.frames.size();
  if (orig == 0) throw DataError("sweep: converted mel is empty");
  while (mel.frames.size() < min_frames)
    mel.frames.push_back(mel.frames[mel.frames.size() % orig]);
  return mel;
}

}  // namespace

SweepReport likability_sweep(const ConverterModel& converter,
                             const Codebook& cb,
                             const PredictorModel& predictor,
                             const CalibrationParams& calib,
                             const std::vector<EvalUtterance>& items,
                             const std::vector<float>& targets, float s,
                             const ReportMeta& meta) {
  check_compatible(converter, predictor);
  SweepReport report;
  report.meta = meta;
  report.targets = targets;
  std::vector<double> sums(targets.size(), 0.0);
  for (const auto& item : items) {
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
      LikabilityRating target;
      target.values = {targets[ti], targets[ti], targets[ti], targets[ti]};
      MelSpectrogram mel = tile_to_min_frames(
          convert(converter, item.feats, cb, item.speaker_emb, target, s),
          kMinPredictorFrames);
      LikabilityRating pred =
          apply_calibration(calib, predict_raw(predictor, mel));
      SweepCell cell;
      cell.id = item.id;
      cell.target = targets[ti];
      cell.pred = pred.values;
      cell.mean = pred.mean();
      sums[ti] += cell.mean;
      report.cells.push_back(std::move(cell));
    }
  }
  report.aggregate_mean.resize(targets.size());
  for (std::size_t ti = 0; ti < targets.size(); ++ti)
    report.aggregate_mean[ti] =
        items.empty() ? 0.0 : sums[ti] / static_cast<double>(items.size());
  return report;
}

Table SweepReport::to_table() const {
  Table t;
  t.header = {"id",         "target",      "pred_m_under40", "pred_m_40plus",
              "pred_f_under40", "pred_f_40plus", "pred_mean"};
  for (const auto& c : cells)
    t.rows.push_back({c.id, fmt(c.target), fmt(c.pred[0]), fmt(c.pred[1]),
                      fmt(c.pred[2]), fmt(c.pred[3]), fmt(c.mean)});
  for (std::size_t ti = 0; ti < targets.size(); ++ti)
    t.rows.push_back({"ALL", fmt(targets[ti]), "", "", "", "",
                      fmt(aggregate_mean[ti])});
  return t;
}

ContentReport content_proxy_eval(const ConverterModel& converter,
                                 const Codebook& cb,
                                 const std::vector<EvalUtterance>& items,
                                 const std::vector<float>& targets, float s,
                                 const ReportMeta& meta) {
  ContentReport report;
  report.meta = meta;
  report.targets = targets;
  std::vector<double> sums(targets.size(), 0.0);
  for (const auto& item : items) {
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
      LikabilityRating target;
      target.values = {targets[ti], targets[ti], targets[ti], targets[ti]};
      MelSpectrogram mel =
          convert(converter, item.feats, cb, item.speaker_emb, target, s);
      FeatureSequence back;
      back.source = FeatureSource::kInternalMel;
      back.frames = mel.frames;
      UnitSequence converted = dedup_runs(quantize(cb, back));
      ContentCell cell;
      cell.id = item.id;
      cell.target = targets[ti];
      cell.cer = cer_units(item.source_units.ids, converted.ids);
      sums[ti] += cell.cer;
      report.cells.push_back(std::move(cell));
    }
  }
  report.aggregate_cer.resize(targets.size());
  for (std::size_t ti = 0; ti < targets.size(); ++ti)
    report.aggregate_cer[ti] =
        items.empty() ? 0.0 : sums[ti] / static_cast<double>(items.size());
  return report;
}

Table ContentReport::to_table() const {
  Table t;
  t.header = {"id", "target", "unit_cer"};
  for (const auto& c : cells)
    t.rows.push_back({c.id, fmt(c.target), fmt(c.cer)});
  for (std::size_t ti = 0; ti < targets.size(); ++ti)
    t.rows.push_back({"ALL", fmt(targets[ti]), fmt(aggregate_cer[ti])});
  return t;
}

namespace {

std::vector<float> centroid_of(const std::vector<const LabeledEmbedding*>& es,
                               const LabeledEmbedding* exclude) {
  std::vector<float> c;
  std::size_t n = 0;
  for (const auto* e : es) {
    if (e == exclude) continue;
    if (c.empty()) c.assign(e->values.size(), 0.0f);
    for (std::size_t i = 0; i < e->values.size(); ++i) c[i] += e->values[i];
    ++n;
  }
  if (n == 0) return c;
  for (auto& v : c) v /= static_cast<float>(n);
  return c;
}

}  // namespace

SimilarityReport speaker_similarity_eval(
    const std::vector<LabeledEmbedding>& references,
    const std::vector<LabeledEmbedding>& conversions, const ReportMeta& meta) {
  if (references.empty())
    throw DataError("similarity: no reference embeddings");
  std::map<std::string, std::vector<const LabeledEmbedding*>> by_speaker;
  for (const auto& r : references) by_speaker[r.speaker].push_back(&r);
  if (by_speaker.size() < 2)
    throw DataError("similarity: need at least two reference speakers");

  std::map<std::string, std::vector<float>> centroids;
  for (const auto& [spk, refs] : by_speaker)
    centroids[spk] = centroid_of(refs, nullptr);

  VerificationTrials trials;
  for (const auto& [spk, refs] : by_speaker) {
    for (const auto* r : refs) {
      if (refs.size() > 1) {
        // Leave-one-out keeps the genuine score honest.
        std::vector<float> own = centroid_of(refs, r);
        trials.genuine_scores.push_back(cosine_similarity(r->values, own));
      }
      for (const auto& [other, c] : centroids) {
        if (other == spk) continue;
        trials.impostor_scores.push_back(cosine_similarity(r->values, c));
      }
    }
  }
  if (trials.genuine_scores.empty())
    throw DataError("similarity: need >= 2 references per speaker");

  EerResult eer = compute_eer(trials);
  SimilarityReport report;
  report.meta = meta;
  report.eer = eer.eer;
  report.threshold = eer.threshold;
  for (const auto& conv : conversions) {
    auto it = centroids.find(conv.speaker);
    if (it == centroids.end())
      throw DataError("similarity: conversion '" + conv.id +
                      "' claims unknown speaker '" + conv.speaker + "'");
    SimilarityCell cell;
    cell.id = conv.id;
    cell.speaker = conv.speaker;
    cell.target = conv.target;
    cell.similarity = cosine_similarity(conv.values, it->second);
    cell.pass = cell.similarity >= report.threshold;
    report.cells.push_back(std::move(cell));
  }
  return report;
}

Table SimilarityReport::to_table() const {
  Table t;
  t.header = {"id", "speaker", "target", "similarity", "pass",
              "eer", "threshold", "reference_threshold"};
  for (const auto& c : cells)
    t.rows.push_back({c.id, c.speaker, fmt(c.target), fmt(c.similarity),
                      c.pass ? "1" : "0", fmt(eer), fmt(threshold),
                      fmt(reference_threshold)});
  return t;
}

PredictorReport predictor_report_from_pairs(
    const std::vector<LikabilityRating>& predictions,
    const std::vector<LikabilityRating>& targets, const ReportMeta& meta) {
  if (predictions.size() != targets.size() || predictions.size() < 2)
    throw DataError("report: need >= 2 aligned prediction/target pairs");
  PredictorReport report;
  report.meta = meta;
  auto row_for = [&](const std::string& name, const std::vector<double>& p,
                     const std::vector<double>& t) {
    PredictorReportRow row;
    row.name = name;
    row.mse = mse(p, t);
    row.pred_std = population_std(p);
    row.lcc = pearson_lcc(p, t);
    row.srcc = spearman_srcc(p, t);
    row.ktau = kendall_tau(p, t);
    row.gt_std = population_std(t);
    return row;
  };
  for (std::size_t g = 0; g < 4; ++g) {
    std::vector<double> p, t;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      p.push_back(predictions[i].values[g]);
      t.push_back(targets[i].values[g]);
    }
    report.rows.push_back(row_for(kGroupNames[g], p, t));
  }
  std::vector<double> pm, tm;
  std::vector<bool> pred_liked, true_liked;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    pm.push_back(predictions[i].mean());
    tm.push_back(targets[i].mean());
    pred_liked.push_back(classify_liked(predictions[i].mean()));
    true_liked.push_back(classify_liked(targets[i].mean()));
  }
  report.rows.push_back(row_for("all", pm, tm));
  AccuracyF1 acc = accuracy_f1(pred_liked, true_liked);
  report.accuracy = acc.accuracy;
  report.f1 = acc.f1;
  return report;
}

PredictorReport predictor_report(const PredictorModel& model,
                                 const CalibrationParams& calib,
                                 const DatasetManifest& manifest, Split split,
                                 const std::string& base_dir,
                                 const ReportMeta& meta) {
  std::vector<LikabilityRating> predictions, targets;
  for (const auto* rec : manifest.split_records(split)) {
    if (!rec->ratings)
      throw DataError("report: record '" + rec->id + "' has no ratings");
    MelSpectrogram mel = frontend_mel(model, resolve_path(base_dir, rec->audio));
    predictions.push_back(apply_calibration(calib, predict_raw(model, mel)));
    LikabilityRating t;
    t.values = *rec->ratings;
    targets.push_back(t);
  }
  return predictor_report_from_pairs(predictions, targets, meta);
}

Table PredictorReport::to_table() const {
  Table t;
  t.header = {"listeners", "mse", "std", "lcc", "srcc", "ktau", "gt_std"};
  for (const auto& r : rows)
    t.rows.push_back({r.name, fmt(r.mse), fmt(r.pred_std), fmt(r.lcc),
                      fmt(r.srcc), fmt(r.ktau), fmt(r.gt_std)});
  return t;
}

void emit_table_csv(const Table& t, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("report: cannot open for write: " + path);
  auto escape = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += "\"\"";
      else out += c;
    }
    out += "\"";
    return out;
  };
  for (std::size_t i = 0; i < t.header.size(); ++i)
    os << (i ? "," : "") << escape(t.header[i]);
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << escape(row[i]);
    os << "\n";
  }
  if (!os) throw DataError("report: write failed: " + path);
}

namespace {

json meta_json(const ReportMeta& meta) {
  return json{{"seed", meta.seed}, {"config_hash", meta.config_hash}};
}

ReportMeta meta_from(const json& j) {
  ReportMeta m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config_hash = j.at("config_hash").get<std::string>();
  return m;
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("report: cannot open for write: " + path);
  os << text << "\n";
  if (!os) throw DataError("report: write failed: " + path);
}

}  // namespace

std::string sweep_report_to_json(const SweepReport& r) {
  json j;
  j["version"] = 1;
  j["kind"] = "likability_sweep";
  j["meta"] = meta_json(r.meta);
  j["targets"] = r.targets;
  j["aggregate_mean"] = r.aggregate_mean;
  j["cells"] = json::array();
  for (const auto& c : r.cells)
    j["cells"].push_back({{"id", c.id},
                          {"target", c.target},
                          {"pred", c.pred},
                          {"mean", c.mean}});
  return j.dump(2);
}

SweepReport sweep_report_from_json(const std::string& text) {
  json j = json::parse(text);
  SweepReport r;
  r.meta = meta_from(j.at("meta"));
  r.targets = j.at("targets").get<std::vector<float>>();
  r.aggregate_mean = j.at("aggregate_mean").get<std::vector<double>>();
  for (const auto& c : j.at("cells")) {
    SweepCell cell;
    cell.id = c.at("id").get<std::string>();
    cell.target = c.at("target").get<float>();
    cell.pred = c.at("pred").get<std::array<double, 4>>();
    cell.mean = c.at("mean").get<double>();
    r.cells.push_back(std::move(cell));
  }
  return r;
}

std::string content_report_to_json(const ContentReport& r) {
  json j;
  j["version"] = 1;
  j["kind"] = "content_proxy";
  j["meta"] = meta_json(r.meta);
  j["targets"] = r.targets;
  j["aggregate_cer"] = r.aggregate_cer;
  j["cells"] = json::array();
  for (const auto& c : r.cells)
    j["cells"].push_back({{"id", c.id}, {"target", c.target}, {"cer", c.cer}});
  return j.dump(2);
}

ContentReport content_report_from_json(const std::string& text) {
  json j = json::parse(text);
  ContentReport r;
  r.meta = meta_from(j.at("meta"));
  r.targets = j.at("targets").get<std::vector<float>>();
  r.aggregate_cer = j.at("aggregate_cer").get<std::vector<double>>();
  for (const auto& c : j.at("cells")) {
    ContentCell cell;
    cell.id = c.at("id").get<std::string>();
    cell.target = c.at("target").get<float>();
    cell.cer = c.at("cer").get<double>();
    r.cells.push_back(std::move(cell));
  }
  return r;
}

std::string similarity_report_to_json(const SimilarityReport& r) {
  json j;
  j["version"] = 1;
  j["kind"] = "speaker_similarity";
  j["meta"] = meta_json(r.meta);
  j["eer"] = r.eer;
  j["threshold"] = r.threshold;
  j["reference_threshold"] = r.reference_threshold;
  j["cells"] = json::array();
  for (const auto& c : r.cells)
    j["cells"].push_back({{"id", c.id},
                          {"speaker", c.speaker},
                          {"target", c.target},
                          {"similarity", c.similarity},
                          {"pass", c.pass}});
  return j.dump(2);
}

SimilarityReport similarity_report_from_json(const std::string& text) {
  json j = json::parse(text);
  SimilarityReport r;
  r.meta = meta_from(j.at("meta"));
  r.eer = j.at("eer").get<double>();
  r.threshold = j.at("threshold").get<double>();
  r.reference_threshold = j.at("reference_threshold").get<float>();
  for (const auto& c : j.at("cells")) {
    SimilarityCell cell;
    cell.id = c.at("id").get<std::string>();
    cell.speaker = c.at("speaker").get<std::string>();
    cell.target = c.at("target").get<float>();
    cell.similarity = c.at("similarity").get<double>();
    cell.pass = c.at("pass").get<bool>();
    r.cells.push_back(std::move(cell));
  }
  return r;
}

std::string predictor_report_to_json(const PredictorReport& r) {
  json j;
  j["version"] = 1;
  j["kind"] = "predictor_report";
  j["meta"] = meta_json(r.meta);
  j["accuracy"] = r.accuracy;
  j["f1"] = r.f1;
  j["rows"] = json::array();
  for (const auto& row : r.rows)
    j["rows"].push_back({{"listeners", row.name},
                         {"mse", row.mse},
                         {"std", row.pred_std},
                         {"lcc", row.lcc},
                         {"srcc", row.srcc},
                         {"ktau", row.ktau},
                         {"gt_std", row.gt_std}});
  return j.dump(2);
}

PredictorReport predictor_report_from_json(const std::string& text) {
  json j = json::parse(text);
  PredictorReport r;
  r.meta = meta_from(j.at("meta"));
  r.accuracy = j.at("accuracy").get<double>();
  r.f1 = j.at("f1").get<double>();
  for (const auto& c : j.at("rows")) {
    PredictorReportRow row;
    row.name = c.at("listeners").get<std::string>();
    row.mse = c.at("mse").get<double>();
    row.pred_std = c.at("std").get<double>();
    row.lcc = c.at("lcc").get<double>();
    row.srcc = c.at("srcc").get<double>();
    row.ktau = c.at("ktau").get<double>();
    row.gt_std = c.at("gt_std").get<double>();
    r.rows.push_back(std::move(row));
  }
  return r;
}

void emit_report(const SweepReport& r, const std::string& path,
                 ReportFormat f) {
  if (f == ReportFormat::kCsv) emit_table_csv(r.to_table(), path);
  else write_text(sweep_report_to_json(r), path);
}

void emit_report(const ContentReport& r, const std::string& path,
                 ReportFormat f) {
  if (f == ReportFormat::kCsv) emit_table_csv(r.to_table(), path);
  else write_text(content_report_to_json(r), path);
}

void emit_report(const SimilarityReport& r, const std::string& path,
                 ReportFormat f) {
  if (f == ReportFormat::kCsv) emit_table_csv(r.to_table(), path);
  else write_text(similarity_report_to_json(r), path);
}

void emit_report(const PredictorReport& r, const std::string& path,
                 ReportFormat f) {
  if (f == ReportFormat::kCsv) emit_table_csv(r.to_table(), path);
  else write_text(predictor_report_to_json(r), path);
}

std::string report_filename(const std::string& base, const ReportMeta& meta,
                            const std::string& ext) {
  std::string hash8 =
      meta.config_hash.size() >= 8 ? meta.config_hash.substr(0, 8)
                                   : meta.config_hash;
  return base + "_" + std::to_string(meta.seed) + "_" + hash8 + "." + ext;
}

}  // namespace voicelike
