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

#ifndef VOICELIKE_EVALHARNESS_HPP_
#define VOICELIKE_EVALHARNESS_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "voicelike/converter.hpp"
#include "voicelike/manifest.hpp"
#include "voicelike/metrics.hpp"
#include "voicelike/predictor.hpp"
#include "voicelike/units.hpp"

namespace voicelike {

// Published external verification operating point shown next to the locally
// computed threshold for comparison.
inline constexpr float kReferenceVerificationThreshold = 0.48f;

// Default evaluation grid: targets -2..2 in steps of 0.5.
std::vector<float> default_target_grid();

// Provenance carried by every report.
struct ReportMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
};

// Generic string table for CSV emission.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

enum class ReportFormat { kCsv, kJson };

// One prepared evaluation utterance: features, conditioning embedding, and
// the source unit string for content checks.
struct EvalUtterance {
  std::string id;
  std::string speaker;
  FeatureSequence feats;
  SpeakerEmbedding speaker_emb;
  UnitSequence source_units;  // deduped
};

std::vector<EvalUtterance> prepare_eval_utterances(
    const DatasetManifest& manifest, Split split, const Codebook& cb,
    const MelConfig& mel_cfg, int sample_rate, const std::string& base_dir);

// ---- Likability sweep --------------------------------------------------

struct SweepCell {
  std::string id;
  float target = 0.0f;           // applied to all four groups uniformly
  std::array<double, 4> pred{};  // calibrated predictions
  double mean = 0.0;
};

struct SweepReport {
  ReportMeta meta;
  std::vector<float> targets;
  std::vector<SweepCell> cells;
  std::vector<double> aggregate_mean;  // mean prediction per target

  Table to_table() const;
};

// convert -> predict -> calibrate over every (utterance, target) pair.
SweepReport likability_sweep(const ConverterModel& converter,
                             const Codebook& cb,
                             const PredictorModel& predictor,
                             const CalibrationParams& calib,
                             const std::vector<EvalUtterance>& items,
                             const std::vector<float>& targets, float s,
                             const ReportMeta& meta = {});

// ---- Content proxy (unit-level CER) -------------------------------------

struct ContentCell {
  std::string id;
  float target = 0.0f;
  double cer = 0.0;
};

struct ContentReport {
  ReportMeta meta;
  std::vector<float> targets;
  std::vector<ContentCell> cells;
  std::vector<double> aggregate_cer;  // mean per target

  Table to_table() const;
};

// Re-quantizes converted mel through the codebook and scores the deduped unit
// string against the source's with CER arithmetic (symbols are unit ids).
ContentReport content_proxy_eval(const ConverterModel& converter,
                                 const Codebook& cb,
                                 const std::vector<EvalUtterance>& items,
                                 const std::vector<float>& targets, float s,
                                 const ReportMeta& meta = {});

// ---- Speaker similarity ---------------------------------------------------

struct LabeledEmbedding {
  std::string id;
  std::string speaker;
  float target = 0.0f;  // meaningful for conversions only
  std::vector<float> values;
};

struct SimilarityCell {
  std::string id;
  std::string speaker;
  float target = 0.0f;
  double similarity = 0.0;
  bool pass = false;
};

struct SimilarityReport {
  ReportMeta meta;
  double eer = 0.0;
  double threshold = 0.0;
  float reference_threshold = kReferenceVerificationThreshold;
  std::vector<SimilarityCell> cells;

  Table to_table() const;
};

// Scores every conversion against its claimed speaker's reference centroid.
// The operating threshold comes from an EER sweep over the reference set's
// same/different-speaker trials (leave-one-out on the genuine side).
SimilarityReport speaker_similarity_eval(
    const std::vector<LabeledEmbedding>& references,
    const std::vector<LabeledEmbedding>& conversions,
    const ReportMeta& meta = {});

// ---- Predictor report (per-group metric table) ---------------------------

struct PredictorReportRow {
  std::string name;  // group name or "all"
  double mse = 0.0;
  double pred_std = 0.0;
  double lcc = 0.0;
  double srcc = 0.0;
  double ktau = 0.0;
  double gt_std = 0.0;
};

struct PredictorReport {
  ReportMeta meta;
  std::vector<PredictorReportRow> rows;  // four groups then "all"
  double accuracy = 0.0;  // liked/disliked on the mean rating
  double f1 = 0.0;

  Table to_table() const;
};

// Metric table from aligned calibrated predictions and ground-truth ratings.
// The "all" row compares the mean of the four outputs against the mean of the
// four targets.
PredictorReport predictor_report_from_pairs(
    const std::vector<LikabilityRating>& predictions,
    const std::vector<LikabilityRating>& targets, const ReportMeta& meta = {});

// Runs the predictor over a manifest split first.
PredictorReport predictor_report(const PredictorModel& model,
                                 const CalibrationParams& calib,
                                 const DatasetManifest& manifest, Split split,
                                 const std::string& base_dir = "",
                                 const ReportMeta& meta = {});

// ---- Emission -------------------------------------------------------------

// CSV: one header row, records below, stable column order, UTF-8.
// JSON: versioned top-level object with the report meta inlined.
void emit_report(const SweepReport& r, const std::string& path, ReportFormat f);
void emit_report(const ContentReport& r, const std::string& path, ReportFormat f);
void emit_report(const SimilarityReport& r, const std::string& path,
                 ReportFormat f);
void emit_report(const PredictorReport& r, const std::string& path,
                 ReportFormat f);
void emit_table_csv(const Table& t, const std::string& path);

std::string sweep_report_to_json(const SweepReport& r);
SweepReport sweep_report_from_json(const std::string& text);
std::string content_report_to_json(const ContentReport& r);
ContentReport content_report_from_json(const std::string& text);
std::string similarity_report_to_json(const SimilarityReport& r);
SimilarityReport similarity_report_from_json(const std::string& text);
std::string predictor_report_to_json(const PredictorReport& r);
PredictorReport predictor_report_from_json(const std::string& text);

// "<base>_<seed>_<hash prefix>.<ext>" so artifact names carry provenance.
std::string report_filename(const std::string& base, const ReportMeta& meta,
                            const std::string& ext);

}  // namespace voicelike

#endif  // VOICELIKE_EVALHARNESS_HPP_
