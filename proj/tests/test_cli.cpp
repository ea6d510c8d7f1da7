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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "test_util.hpp"
#include "voicelike/manifest.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run_cli(const std::string& args, const std::string& log_path) {
  const std::string cmd = std::string(VOICELIKE_CLI_PATH) + " " + args + " > " +
                          log_path + " 2>&1";
  int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream is(log_path);
  r.output.assign(std::istreambuf_iterator<char>(is),
                  std::istreambuf_iterator<char>());
  return r;
}

// Small end-to-end friendly config (8 kHz, short clips, tiny models).
const char* kTinyConfig = R"({
  "seed": 11,
  "sample_rate": 8000,
  "mel": {"n_mels": 24, "f_max": 3800.0, "hop": 64, "win": 256, "fft_size": 256},
  "train": {"epochs": 2, "batch_size": 8, "crop_seconds": 0.5, "augment_enabled": false},
  "units": {"k": 12, "iterations": 40},
  "converter": {"embed_dim": 12, "encoder_depth": 1, "decoder_depth": 1, "duration_hidden": 8},
  "converter_train": {"epochs": 3, "batch_size": 8},
  "synthetic": {"speakers": 2, "clips_per_speaker": 8, "clip_seconds": 0.5}
})";

}  // namespace

TEST_CASE("help exits zero and lists the subcommands") {
  testutil::TempDir dir("cli_help");
  RunResult r = run_cli("--help", dir.file("log.txt"));
  CHECK(r.exit_code == 0);
  for (const char* sub :
       {"train-predictor", "annotate", "fit-units", "tokenize",
        "train-converter", "convert", "evaluate", "synth-corpus", "gradcheck"})
    CHECK(r.output.find(sub) != std::string::npos);
}

TEST_CASE("missing manifest exits 3 and names the path") {
  testutil::TempDir dir("cli_missing");
  RunResult r = run_cli("train-predictor --manifest /no/such/file.jsonl --out " +
                            dir.str(),
                        dir.file("log.txt"));
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("/no/such/file.jsonl") != std::string::npos);
}

TEST_CASE("bad config exits 2") {
  testutil::TempDir dir("cli_badcfg");
  std::ofstream(dir.file("bad.json")) << R"({"sedd": 1})";
  RunResult r = run_cli("--config " + dir.file("bad.json") +
                            " synth-corpus --out " + dir.str(),
                        dir.file("log.txt"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("sedd") != std::string::npos);
}

TEST_CASE("synth-corpus writes clips and a manifest") {
  testutil::TempDir dir("cli_synth");
  std::ofstream(dir.file("cfg.json")) << kTinyConfig;
  RunResult r = run_cli("--config " + dir.file("cfg.json") +
                            " synth-corpus --out " + dir.file("corpus"),
                        dir.file("log.txt"));
  REQUIRE(r.exit_code == 0);
  auto manifest =
      voicelike::load_manifest((fs::path(dir.file("corpus")) / "manifest.jsonl").string());
  CHECK(manifest.records.size() == 16);
  CHECK(fs::exists(fs::path(dir.file("corpus")) / "meta.json"));
}

TEST_CASE("gradcheck passes") {
  testutil::TempDir dir("cli_grad");
  RunResult r = run_cli("gradcheck", dir.file("log.txt"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("gradcheck OK") != std::string::npos);
}

TEST_CASE("tiny end-to-end pipeline through the CLI") {
  testutil::TempDir dir("cli_e2e");
  const std::string cfg = dir.file("cfg.json");
  std::ofstream(cfg) << kTinyConfig;
  const std::string corpus = dir.file("corpus");
  const std::string log = dir.file("log.txt");

  REQUIRE(run_cli("--config " + cfg + " synth-corpus --out " + corpus, log)
              .exit_code == 0);
  const std::string manifest = (fs::path(corpus) / "manifest.jsonl").string();

  REQUIRE(run_cli("--config " + cfg + " train-predictor --manifest " + manifest +
                      " --out " + dir.file("predictor"),
                  log)
              .exit_code == 0);
  const std::string ckpt = (fs::path(dir.file("predictor")) / "predictor.lkbl").string();
  const std::string calib =
      (fs::path(dir.file("predictor")) / "calibration.json").string();
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(calib));
  CHECK(fs::exists(fs::path(dir.file("predictor")) / "history.csv"));

  SUBCASE("rerunning with the same seed reproduces the checkpoint bytes") {
    REQUIRE(run_cli("--config " + cfg + " train-predictor --manifest " +
                        manifest + " --out " + dir.file("predictor2"),
                    log)
                .exit_code == 0);
    std::ifstream a(ckpt, std::ios::binary);
    std::ifstream b(
        (fs::path(dir.file("predictor2")) / "predictor.lkbl").string(),
        std::ios::binary);
    std::string abytes((std::istreambuf_iterator<char>(a)),
                       std::istreambuf_iterator<char>());
    std::string bbytes((std::istreambuf_iterator<char>(b)),
                       std::istreambuf_iterator<char>());
    CHECK(abytes == bbytes);
  }

  // keep the annotated manifest next to the audio so relative paths resolve
  const std::string annotated = (fs::path(corpus) / "annotated.jsonl").string();
  REQUIRE(run_cli("--config " + cfg + " annotate --checkpoint " + ckpt +
                      " --calib " + calib + " --manifest " + manifest +
                      " --out " + annotated,
                  log)
              .exit_code == 0);
  auto ann = voicelike::load_manifest(annotated);
  CHECK(ann.records.size() == 16);
  for (const auto& rec : ann.records) CHECK(rec.ratings_pred.has_value());

  const std::string codebook = dir.file("codebook.lkbc");
  REQUIRE(run_cli("--config " + cfg + " fit-units --manifest " + annotated +
                      " --out " + codebook,
                  log)
              .exit_code == 0);
  CHECK(fs::exists(codebook));

  const std::string units = dir.file("units.jsonl");
  REQUIRE(run_cli("--config " + cfg + " tokenize --codebook " + codebook +
                      " --manifest " + annotated + " --out " + units,
                  log)
              .exit_code == 0);
  std::ifstream units_in(units);
  std::string line;
  std::size_t unit_lines = 0;
  while (std::getline(units_in, line)) {
    CHECK(line.find("\"units\"") != std::string::npos);
    CHECK(line.find("\"runs\"") != std::string::npos);
    ++unit_lines;
  }
  CHECK(unit_lines == 16);

  REQUIRE(run_cli("--config " + cfg + " train-converter --manifest " + annotated +
                      " --codebook " + codebook + " --out " + dir.file("converter"),
                  log)
              .exit_code == 0);
  const std::string conv_ckpt =
      (fs::path(dir.file("converter")) / "converter.lkbl").string();
  CHECK(fs::exists(conv_ckpt));

  // convert with the default inference scale (2.5) to features
  const std::string wav0 = (fs::path(corpus) / ann.records[0].audio).string();
  REQUIRE(run_cli("--config " + cfg + " convert --converter " + conv_ckpt +
                      " --codebook " + codebook + " --input " + wav0 +
                      " --out " + dir.file("converted.lkbf") + " --target 1.0",
                  log)
              .exit_code == 0);
  CHECK(fs::exists(dir.file("converted.lkbf")));

  // --wav routes through the vocoder
  REQUIRE(run_cli("--config " + cfg + " convert --converter " + conv_ckpt +
                      " --codebook " + codebook + " --input " + wav0 +
                      " --out " + dir.file("converted.wav") +
                      " --target -1.0 --wav",
                  log)
              .exit_code == 0);
  CHECK(fs::exists(dir.file("converted.wav")));

  // --scale 0 must produce target-invariant outputs
  REQUIRE(run_cli("--config " + cfg + " convert --converter " + conv_ckpt +
                      " --codebook " + codebook + " --input " + wav0 +
                      " --out " + dir.file("s0_a.lkbf") +
                      " --target 2.0 --scale 0",
                  log)
              .exit_code == 0);
  REQUIRE(run_cli("--config " + cfg + " convert --converter " + conv_ckpt +
                      " --codebook " + codebook + " --input " + wav0 +
                      " --out " + dir.file("s0_b.lkbf") +
                      " --target -2.0 --scale 0",
                  log)
              .exit_code == 0);
  {
    std::ifstream a(dir.file("s0_a.lkbf"), std::ios::binary);
    std::ifstream b(dir.file("s0_b.lkbf"), std::ios::binary);
    std::string abytes((std::istreambuf_iterator<char>(a)),
                       std::istreambuf_iterator<char>());
    std::string bbytes((std::istreambuf_iterator<char>(b)),
                       std::istreambuf_iterator<char>());
    CHECK(abytes == bbytes);
  }

  // evaluate: sweep-only run emits exactly one report file
  REQUIRE(run_cli("--config " + cfg + " evaluate --predictor " + ckpt +
                      " --calib " + calib + " --converter " + conv_ckpt +
                      " --codebook " + codebook + " --manifest " + annotated +
                      " --out " + dir.file("reports") + " --sweep",
                  log)
              .exit_code == 0);
  std::size_t n_reports = 0;
  for (const auto& entry : fs::directory_iterator(dir.file("reports"))) {
    (void)entry;
    ++n_reports;
  }
  CHECK(n_reports == 1);

  // evaluate without selecting anything is a config error
  CHECK(run_cli("--config " + cfg + " evaluate --manifest " + annotated +
                    " --out " + dir.file("reports2"),
                log)
            .exit_code == 2);

  // annotate continues over corrupt audio with a rejects sidecar, exit 0
  {
    std::ofstream(dir.file("broken.wav")) << "junk";
    voicelike::DatasetManifest with_bad = ann;
    with_bad.records[0].audio = "../broken.wav";
    const std::string bad_manifest =
        (fs::path(corpus) / "with_bad.jsonl").string();
    voicelike::save_manifest(with_bad, bad_manifest);
    // note: audio paths resolve against the manifest directory
    RunResult r = run_cli("--config " + cfg + " annotate --checkpoint " + ckpt +
                              " --calib " + calib + " --manifest " +
                              bad_manifest + " --out " + dir.file("ann2.jsonl"),
                          log);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("rejected 1") != std::string::npos);
  }
}
