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
//
// voicelike: likability prediction, discrete-unit voice conversion and the
// objective evaluation harness behind one executable.
//
//   voicelike synth-corpus      generate the demo corpus with planted ratings
//   voicelike train-predictor   train the likability predictor (+calibration)
//   voicelike annotate          batch-annotate a manifest with predictions
//   voicelike fit-units         fit the mini-batch k-means codebook
//   voicelike tokenize          write discrete unit strings per utterance
//   voicelike train-converter   train the likability-conditioned converter
//   voicelike convert           run conversion on one utterance
//   voicelike evaluate          sweep/content/similarity/predictor reports
//   voicelike gradcheck         finite-difference gradient verification

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "voicelike/audio.hpp"
#include "voicelike/common.hpp"
#include "voicelike/config.hpp"
#include "voicelike/converter.hpp"
#include "voicelike/evalharness.hpp"
#include "voicelike/manifest.hpp"
#include "voicelike/nn.hpp"
#include "voicelike/predictor.hpp"
#include "voicelike/synthetic.hpp"
#include "voicelike/threading.hpp"
#include "voicelike/units.hpp"

namespace fs = std::filesystem;
using namespace voicelike;

namespace {

struct GlobalOpts {
  std::string config_path;
  int threads = 0;
};

RunConfig effective_config(const GlobalOpts& g) {
  RunConfig cfg = g.config_path.empty() ? parse_run_config("{}")
                                        : load_run_config(g.config_path);
  if (g.threads > 0) cfg.threads = g.threads;
  return cfg;
}

std::string manifest_dir(const std::string& manifest_path) {
  return fs::path(manifest_path).parent_path().string();
}

void write_meta(const RunConfig& cfg, const std::string& command,
                const std::string& path) {
  nlohmann::json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["config_hash"] = config_hash(cfg);
  std::ofstream os(path);
  if (!os) throw DataError("cannot write meta file: " + path);
  os << j.dump(2) << "\n";
}

void write_history_csv(const TrainHistory& history, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write history file: " + path);
  os << "epoch,train_loss,val_srcc\n";
  for (const auto& e : history.epochs)
    os << e.epoch << "," << e.train_loss << "," << e.val_srcc << "\n";
}

LikabilityRating parse_target(const std::string& text) {
  LikabilityRating r;
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  if (vals.size() == 1) {
    r.values = {vals[0], vals[0], vals[0], vals[0]};
  } else if (vals.size() == 4) {
    for (std::size_t g = 0; g < 4; ++g) r.values[g] = vals[g];
  } else {
    throw ConfigError("--target expects one value or four comma-separated");
  }
  return r;
}

FeatureSequence features_for_record(const ManifestRecord& rec,
                                    const MelConfig& mel, int rate,
                                    const std::string& base) {
  return load_utterance_inputs(rec, mel, rate, base).feats;
}

int run_synth_corpus(const GlobalOpts& g, const std::string& out_dir) {
  RunConfig cfg = effective_config(g);
  DatasetManifest m = generate_synthetic_corpus(cfg.synthetic, out_dir);
  write_meta(cfg, "synth-corpus", (fs::path(out_dir) / "meta.json").string());
  std::cout << "wrote " << m.records.size() << " clips under " << out_dir
            << "\n";
  return 0;
}

int run_train_predictor(const GlobalOpts& g, const std::string& manifest_path,
                        const std::string& out_dir) {
  RunConfig cfg = effective_config(g);
  if (!fs::exists(manifest_path))
    throw DataError("manifest not found: " + manifest_path);
  DatasetManifest manifest = load_manifest(manifest_path);
  fs::create_directories(out_dir);

  PredictorModel model = build_model(cfg.seed, cfg.mel, cfg.sample_rate);
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  tc.threads = resolve_threads(cfg.threads);
  const std::string base = manifest_dir(manifest_path);
  TrainHistory history = train(model, manifest, tc, base);

  // Calibration statistics come from the validation split.
  std::vector<LikabilityRating> preds, targets;
  for (const auto* rec : manifest.split_records(Split::kVal)) {
    MelSpectrogram mel = frontend_mel(model, resolve_path(base, rec->audio));
    preds.push_back(predict_raw(model, mel));
    LikabilityRating t;
    t.values = *rec->ratings;
    targets.push_back(t);
  }
  CalibrationParams calib = fit_calibration(preds, targets);

  save_predictor(model, (fs::path(out_dir) / "predictor.lkbl").string());
  save_calibration(calib, (fs::path(out_dir) / "calibration.json").string());
  write_history_csv(history, (fs::path(out_dir) / "history.csv").string());
  write_meta(cfg, "train-predictor", (fs::path(out_dir) / "meta.json").string());
  std::cout << "best epoch " << history.best_epoch << ", val SRCC "
            << history.best_val_srcc << "\n";
  return 0;
}

int run_annotate(const GlobalOpts& g, const std::string& checkpoint,
                 const std::string& calib_path, const std::string& manifest_path,
                 const std::string& out_path, std::string rejects_path) {
  RunConfig cfg = effective_config(g);
  if (!fs::exists(manifest_path))
    throw DataError("manifest not found: " + manifest_path);
  PredictorModel model = load_predictor(checkpoint);
  CalibrationParams calib = load_calibration(calib_path);
  if (rejects_path.empty()) rejects_path = out_path + ".rejects.jsonl";

  std::ifstream is(manifest_path);
  if (!is) throw DataError("manifest not found: " + manifest_path);
  std::ofstream os(out_path);
  if (!os) throw DataError("cannot write: " + out_path);
  std::ofstream rejects(rejects_path);
  if (!rejects) throw DataError("cannot write: " + rejects_path);

  const std::string base = manifest_dir(manifest_path);
  const int threads = resolve_threads(cfg.threads);
  std::size_t n_ok = 0, n_rejected = 0;

  // Constant-memory streaming: annotate in fixed-size chunks, emit in input
  // order.
  std::vector<std::string> chunk;
  const std::size_t kChunk = 64;
  std::string line;
  bool more = true;
  while (more) {
    chunk.clear();
    while (chunk.size() < kChunk && (more = bool(std::getline(is, line)))) {
      if (!line.empty()) chunk.push_back(line);
    }
    if (chunk.empty()) continue;
    DatasetManifest part;
    for (const auto& l : chunk) part.records.push_back(record_from_json_line(l));
    AnnotateResult res = annotate_corpus(model, calib, part, base, threads);
    for (const auto& rec : res.annotated.records)
      os << record_to_json_line(rec) << "\n";
    for (const auto& rej : res.rejects) {
      nlohmann::json j{{"id", rej.id}, {"audio", rej.audio},
                       {"reason", rej.reason}};
      rejects << j.dump() << "\n";
      ++n_rejected;
    }
    n_ok += res.annotated.records.size();
  }
  std::cout << "annotated " << n_ok << " records, rejected " << n_rejected
            << "\n";
  return 0;
}

int run_fit_units(const GlobalOpts& g, const std::string& manifest_path,
                  const std::string& out_path) {
  RunConfig cfg = effective_config(g);
  if (!fs::exists(manifest_path))
    throw DataError("manifest not found: " + manifest_path);
  DatasetManifest manifest = load_manifest(manifest_path);
  const std::string base = manifest_dir(manifest_path);
  std::vector<std::vector<float>> frames;
  for (const auto* rec : manifest.split_records(Split::kTrain)) {
    FeatureSequence f = features_for_record(*rec, cfg.mel, cfg.sample_rate, base);
    for (auto& row : f.frames) frames.push_back(std::move(row));
  }
  if (frames.empty()) throw DataError("fit-units: no training features");
  KMeansConfig kc = cfg.units;
  kc.seed = cfg.seed;
  Codebook cb = fit_minibatch_kmeans(frames, kc);
  save_codebook(cb, out_path);
  std::cout << "codebook k=" << cb.k() << " dim=" << cb.dim() << " inertia="
            << inertia(cb, frames) << "\n";
  return 0;
}

int run_tokenize(const GlobalOpts& g, const std::string& codebook_path,
                 const std::string& manifest_path, const std::string& out_path) {
  RunConfig cfg = effective_config(g);
  Codebook cb = load_codebook(codebook_path);
  DatasetManifest manifest = load_manifest(manifest_path);
  const std::string base = manifest_dir(manifest_path);
  std::ofstream os(out_path);
  if (!os) throw DataError("cannot write: " + out_path);
  for (const auto& rec : manifest.records) {
    FeatureSequence f = features_for_record(rec, cfg.mel, cfg.sample_rate, base);
    UnitSequence u = dedup_runs(quantize(cb, f));
    nlohmann::json j{{"id", rec.id}, {"units", u.ids}, {"runs", u.run_lengths}};
    os << j.dump() << "\n";
  }
  return 0;
}

int run_train_converter(const GlobalOpts& g, const std::string& manifest_path,
                        const std::string& codebook_path,
                        const std::string& out_dir) {
  RunConfig cfg = effective_config(g);
  if (!fs::exists(manifest_path))
    throw DataError("manifest not found: " + manifest_path);
  Codebook cb = load_codebook(codebook_path);
  DatasetManifest manifest = load_manifest(manifest_path);
  const std::string base = manifest_dir(manifest_path);

  std::vector<ConverterExample> data = prepare_converter_examples(
      manifest, Split::kTrain, cb, cfg.mel, cfg.sample_rate, base);
  if (data.empty()) throw DataError("train-converter: no training examples");

  ConverterConfig cc = cfg.converter;
  cc.vocab_k = static_cast<int>(cb.k());
  cc.mel_bins = cfg.mel.n_mels;
  cc.speaker_dim = static_cast<int>(data.front().speaker.values.size());
  cc.seed = cfg.seed;
  ConverterModel model = build_converter(cc, cfg.mel, cfg.sample_rate);

  ConverterTrainConfig tc = cfg.converter_train;
  tc.seed = cfg.seed;
  tc.threads = resolve_threads(cfg.threads);
  ConverterTrainStats stats = train_converter(model, data, tc);

  fs::create_directories(out_dir);
  save_converter(model, (fs::path(out_dir) / "converter.lkbl").string());
  write_meta(cfg, "train-converter", (fs::path(out_dir) / "meta.json").string());
  std::ofstream hist((fs::path(out_dir) / "history.csv").string());
  hist << "epoch,loss\n";
  for (std::size_t i = 0; i < stats.epoch_loss.size(); ++i)
    hist << i << "," << stats.epoch_loss[i] << "\n";
  std::cout << "final mel MSE " << stats.final_mel_mse << ", duration MAE "
            << stats.final_duration_mae << "\n";
  return 0;
}

int run_convert(const GlobalOpts& g, const std::string& converter_path,
                const std::string& codebook_path, const std::string& input,
                const std::string& output, const std::string& speaker_path,
                const std::string& target_text, double scale, bool has_scale,
                bool to_wav) {
  RunConfig cfg = effective_config(g);
  ConverterModel model = load_converter(converter_path);
  Codebook cb = load_codebook(codebook_path);

  FeatureSequence feats;
  SpeakerEmbedding spk;
  if (input.size() > 5 && input.substr(input.size() - 5) == ".lkbf") {
    feats = load_features(input);
    if (speaker_path.empty())
      throw DataError("convert: feature input needs --speaker-embedding");
  } else {
    Waveform w = to_mono(load_wav(input));
    if (w.sample_rate != model.sample_rate)
      w = resample(w, model.sample_rate);
    MelSpectrogram mel = log_mel_spectrogram(w, model.mel);
    feats.source = FeatureSource::kInternalMel;
    feats.frames = mel.frames;
    if (speaker_path.empty()) spk = fallback_speaker_embedding(mel);
  }
  if (!speaker_path.empty()) spk = load_embedding(speaker_path);

  LikabilityRating target = parse_target(target_text);
  const float s = has_scale ? static_cast<float>(scale) : cfg.s_eval;
  MelSpectrogram mel = convert(model, feats, cb, spk, target, s);
  if (to_wav) {
    Waveform w = griffin_lim_vocoder(mel);
    save_wav_pcm16(w, output);
  } else {
    FeatureSequence out;
    out.frames = mel.frames;
    save_features(out, output);
  }
  std::cout << "converted " << mel.num_frames() << " frames (s=" << s << ")\n";
  return 0;
}

int run_evaluate(const GlobalOpts& g, const std::string& predictor_path,
                 const std::string& calib_path, const std::string& converter_path,
                 const std::string& codebook_path, const std::string& manifest_path,
                 const std::string& out_dir, bool do_sweep, bool do_content,
                 bool do_similarity, bool do_report, const std::string& format) {
  RunConfig cfg = effective_config(g);
  const bool any = do_sweep || do_content || do_similarity || do_report;
  if (!any)
    throw ConfigError(
        "evaluate: select at least one of --sweep/--content/--similarity/--report");
  if (!fs::exists(manifest_path))
    throw DataError("manifest not found: " + manifest_path);
  const ReportFormat fmt =
      format == "json" ? ReportFormat::kJson : ReportFormat::kCsv;
  const std::string ext = format == "json" ? "json" : "csv";
  fs::create_directories(out_dir);
  DatasetManifest manifest = load_manifest(manifest_path);
  const std::string base = manifest_dir(manifest_path);
  ReportMeta meta{cfg.seed, config_hash(cfg)};

  PredictorModel predictor;
  CalibrationParams calib;
  if (do_sweep || do_report) {
    if (predictor_path.empty() || calib_path.empty())
      throw DataError("evaluate: --predictor and --calib are required");
    predictor = load_predictor(predictor_path);
    calib = load_calibration(calib_path);
  }

  if (do_report) {
    PredictorReport report =
        predictor_report(predictor, calib, manifest, Split::kTest, base, meta);
    emit_report(report,
                (fs::path(out_dir) / report_filename("predictor_report", meta, ext))
                    .string(),
                fmt);
  }

  if (do_sweep || do_content || do_similarity) {
    if (converter_path.empty() || codebook_path.empty())
      throw DataError("evaluate: --converter and --codebook are required");
    ConverterModel converter = load_converter(converter_path);
    Codebook cb = load_codebook(codebook_path);
    std::vector<EvalUtterance> items = prepare_eval_utterances(
        manifest, Split::kTest, cb, converter.mel, converter.sample_rate, base);
    const std::vector<float> targets = cfg.target_grid();

    if (do_sweep) {
      SweepReport report = likability_sweep(converter, cb, predictor, calib,
                                            items, targets, cfg.s_eval, meta);
      emit_report(report,
                  (fs::path(out_dir) / report_filename("sweep", meta, ext)).string(),
                  fmt);
    }
    if (do_content) {
      ContentReport report =
          content_proxy_eval(converter, cb, items, targets, cfg.s_eval, meta);
      emit_report(report,
                  (fs::path(out_dir) / report_filename("content", meta, ext)).string(),
                  fmt);
    }
    if (do_similarity) {
      // References: test-split originals; conversions swept over the grid.
      std::vector<LabeledEmbedding> refs, convs;
      for (const auto& item : items) {
        LabeledEmbedding e;
        e.id = item.id;
        e.speaker = item.speaker;
        e.values = item.speaker_emb.values;
        refs.push_back(std::move(e));
      }
      for (const auto& item : items) {
        for (float t : targets) {
          LikabilityRating target;
          target.values = {t, t, t, t};
          MelSpectrogram mel = convert(converter, item.feats, cb,
                                       item.speaker_emb, target, cfg.s_eval);
          LabeledEmbedding e;
          e.id = item.id;
          e.speaker = item.speaker;
          e.target = t;
          e.values = fallback_speaker_embedding(mel).values;
          convs.push_back(std::move(e));
        }
      }
      SimilarityReport report = speaker_similarity_eval(refs, convs, meta);
      emit_report(report,
                  (fs::path(out_dir) / report_filename("similarity", meta, ext))
                      .string(),
                  fmt);
    }
  }
  std::cout << "reports written to " << out_dir << "\n";
  return 0;
}

int run_gradcheck(const GlobalOpts& g) {
  RunConfig cfg = effective_config(g);
  (void)cfg;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double worst = 0.0;

  // Full predictor graph in float64 on a short input.
  {
    PredictorModel model = build_model(42);
    auto dp = model.params.cast<double>();
    TensorD input(20, 80);
    for (auto& v : input.data) v = u(rng);
    TensorD target(std::size_t(1), std::size_t(4));
    for (auto& v : target.data) v = u(rng);
    std::vector<TensorD*> params = dp.all();
    auto build = [&](Tape<double>& t) {
      std::vector<Tape<double>::Var> bound;
      for (auto* p : params) bound.push_back(t.param(*p));
      auto out = predictor_forward(t, bound, t.constant(input));
      return t.mse(out, t.constant(target));
    };
    auto res = fd_check(params, build, 1e-4);
    std::cout << "predictor max relative gradient error: " << res.max_rel_err
              << " over " << res.elements << " elements\n";
    worst = std::max(worst, res.max_rel_err);
  }

  // Full converter training graph in float64.
  {
    ConverterConfig cc;
    cc.vocab_k = 6;
    cc.embed_dim = 8;
    cc.encoder_depth = 1;
    cc.decoder_depth = 1;
    cc.mel_bins = 5;
    cc.duration_hidden = 4;
    cc.speaker_dim = 3;
    cc.seed = 11;
    ConverterModel model = build_converter(cc);
    auto dp = model.params.cast<double>();
    std::vector<int> ids{0, 3, 2, 5};
    std::vector<int> runs{2, 1, 3, 1};
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
    std::cout << "converter max relative gradient error: " << res.max_rel_err
              << " over " << res.elements << " elements\n";
    worst = std::max(worst, res.max_rel_err);
  }

  std::cout << (worst < 1e-4 ? "gradcheck OK" : "gradcheck FAILED") << "\n";
  return worst < 1e-4 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voice likability prediction and conversion toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--threads", g.threads,
                 "worker threads (VOICELIKE_THREADS env mirrors this)");

  auto* synth = app.add_subcommand("synth-corpus",
                                   "generate a synthetic corpus with planted ratings");
  std::string out_dir;
  synth->add_option("--out", out_dir, "output directory")->required();

  auto* trainp = app.add_subcommand("train-predictor",
                                    "train the likability predictor");
  std::string manifest_path, calib_path, checkpoint_path, rejects_path;
  trainp->add_option("--manifest", manifest_path, "JSONL manifest")->required();
  trainp->add_option("--out", out_dir, "output directory")->required();

  auto* annotate = app.add_subcommand("annotate",
                                      "predict ratings for every record");
  std::string out_path;
  annotate->add_option("--checkpoint", checkpoint_path, "predictor checkpoint")
      ->required();
  annotate->add_option("--calib", calib_path, "calibration JSON")->required();
  annotate->add_option("--manifest", manifest_path, "JSONL manifest")->required();
  annotate->add_option("--out", out_path, "annotated manifest path")->required();
  annotate->add_option("--rejects", rejects_path, "rejects sidecar path");

  auto* fitu = app.add_subcommand("fit-units", "fit the k-means codebook");
  std::string codebook_path;
  fitu->add_option("--manifest", manifest_path, "JSONL manifest")->required();
  fitu->add_option("--out", codebook_path, "codebook output path")->required();

  auto* tok = app.add_subcommand("tokenize", "write unit strings per record");
  std::string units_out;
  tok->add_option("--codebook", codebook_path, "codebook path")->required();
  tok->add_option("--manifest", manifest_path, "JSONL manifest")->required();
  tok->add_option("--out", units_out, "units JSONL output")->required();

  auto* trainc = app.add_subcommand("train-converter",
                                    "train the likability-conditioned converter");
  trainc->add_option("--manifest", manifest_path, "annotated manifest")
      ->required();
  trainc->add_option("--codebook", codebook_path, "codebook path")->required();
  trainc->add_option("--out", out_dir, "output directory")->required();

  auto* conv = app.add_subcommand("convert", "convert one utterance");
  std::string converter_path, input_path, speaker_path, target_text = "0";
  double scale = 2.5;
  bool to_wav = false;
  conv->add_option("--converter", converter_path, "converter checkpoint")
      ->required();
  conv->add_option("--codebook", codebook_path, "codebook path")->required();
  conv->add_option("--input", input_path, "input WAV or .lkbf features")
      ->required();
  conv->add_option("--out", out_path, "output path (.lkbf, or .wav with --wav)")
      ->required();
  conv->add_option("--speaker-embedding", speaker_path,
                   "speaker embedding (.lkbe); defaults to the input's own");
  conv->add_option("--target", target_text,
                   "target likability: one value or four comma-separated");
  auto* scale_opt =
      conv->add_option("--scale", scale, "conditioning scale s (default 2.5)");
  conv->add_flag("--wav", to_wav, "vocode to PCM16 WAV via Griffin-Lim");

  auto* eval = app.add_subcommand("evaluate", "run the objective evaluations");
  std::string predictor_path, eval_format = "csv";
  bool do_sweep = false, do_content = false, do_similarity = false,
       do_report = false;
  eval->add_option("--predictor", predictor_path, "predictor checkpoint");
  eval->add_option("--calib", calib_path, "calibration JSON");
  eval->add_option("--converter", converter_path, "converter checkpoint");
  eval->add_option("--codebook", codebook_path, "codebook path");
  eval->add_option("--manifest", manifest_path, "JSONL manifest")->required();
  eval->add_option("--out", out_dir, "report directory")->required();
  eval->add_option("--format", eval_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  eval->add_flag("--sweep", do_sweep, "likability sweep (target grid)");
  eval->add_flag("--content", do_content, "unit-CER content proxy");
  eval->add_flag("--similarity", do_similarity, "speaker similarity + EER");
  eval->add_flag("--report", do_report, "per-group predictor metric table");

  auto* grad = app.add_subcommand("gradcheck",
                                  "finite-difference gradient verification");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth_corpus(g, out_dir);
    if (trainp->parsed()) return run_train_predictor(g, manifest_path, out_dir);
    if (annotate->parsed())
      return run_annotate(g, checkpoint_path, calib_path, manifest_path,
                          out_path, rejects_path);
    if (fitu->parsed()) return run_fit_units(g, manifest_path, codebook_path);
    if (tok->parsed())
      return run_tokenize(g, codebook_path, manifest_path, units_out);
    if (trainc->parsed())
      return run_train_converter(g, manifest_path, codebook_path, out_dir);
    if (conv->parsed())
      return run_convert(g, converter_path, codebook_path, input_path, out_path,
                         speaker_path, target_text, scale,
                         scale_opt->count() > 0, to_wav);
    if (eval->parsed())
      return run_evaluate(g, predictor_path, calib_path, converter_path,
                          codebook_path, manifest_path, out_dir, do_sweep,
                          do_content, do_similarity, do_report, eval_format);
    if (grad->parsed()) return run_gradcheck(g);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
