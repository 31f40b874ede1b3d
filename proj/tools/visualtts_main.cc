// tools/visualtts_main.cc

// Copyright 2026  The VisualTTS Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "visualtts/common.h"
#include "visualtts/manifest.h"
#include "visualtts/metrics.h"
#include "visualtts/model.h"
#include "visualtts/tokenizer.h"
#include "visualtts/toy_data.h"
#include "visualtts/trainer.h"
#include "visualtts/vocoder.h"

namespace visualtts {
namespace {

// Exit codes shared by every subcommand: 0 success, 1 validation or data
// problem, 2 numeric or other runtime failure.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

int RunMakeToyData(std::uint64_t seed, int n_utts, int n_speakers,
                   const std::string &out_dir) {
  std::printf("make-toy-data: seed=%llu n-utts=%d n-speakers=%d out=%s\n",
              static_cast<unsigned long long>(seed), n_utts, n_speakers,
              out_dir.c_str());
  ToyDatasetOptions options;
  options.seed = seed;
  options.num_utterances = n_utts;
  options.num_speakers = n_speakers;
  const std::filesystem::path manifest = MakeToyDataset(options, out_dir);
  std::printf("manifest: %s\n", manifest.string().c_str());
  return kExitOk;
}

// The train config file is a single JSON object; every key is optional and
// falls back to the TrainConfig default.  Unknown keys are rejected so a
// typo cannot silently train with defaults.
TrainConfig ReadTrainConfig(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError(path + ": config must be a JSON object");

  static const std::set<std::string> known = {
      "variant",   "learning_rate",    "batch_size",     "max_steps",
      "seed",      "toy_scale",        "checkpoint_every", "grad_clip_norm"};
  for (const auto &[key, value] : j.items()) {
    if (known.count(key) == 0) {
      throw FormatError(path + ": unknown config key \"" + key + "\"");
    }
  }

  TrainConfig tc;
  try {
    if (j.contains("variant")) {
      tc.model_variant = ParseModelVariant(j.at("variant").get<std::string>());
    }
    if (j.contains("learning_rate")) tc.learning_rate = j.at("learning_rate");
    if (j.contains("batch_size")) tc.batch_size = j.at("batch_size");
    if (j.contains("max_steps")) tc.max_steps = j.at("max_steps");
    if (j.contains("seed")) tc.seed = j.at("seed");
    if (j.contains("toy_scale")) tc.toy_scale = j.at("toy_scale");
    if (j.contains("checkpoint_every")) tc.checkpoint_every = j.at("checkpoint_every");
    if (j.contains("grad_clip_norm")) tc.grad_clip_norm = j.at("grad_clip_norm");
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(path + ": " + e.what());
  }
  tc.Validate();
  return tc;
}

int RunTrain(const std::string &config_path, const std::string &manifest,
             const std::string &out_dir) {
  const TrainConfig tc = ReadTrainConfig(config_path);
  nlohmann::ordered_json echo;
  echo["variant"] = ToString(tc.model_variant);
  echo["learning_rate"] = tc.learning_rate;
  echo["batch_size"] = tc.batch_size;
  echo["max_steps"] = tc.max_steps;
  echo["seed"] = tc.seed;
  echo["toy_scale"] = tc.toy_scale;
  echo["checkpoint_every"] = tc.checkpoint_every;
  echo["grad_clip_norm"] = tc.grad_clip_norm;
  std::printf("train: manifest=%s out=%s\nresolved config: %s\n", manifest.c_str(),
              out_dir.c_str(), echo.dump().c_str());

  const ModelConfig mc = tc.toy_scale ? ModelConfig::Scaled() : ModelConfig();
  Trainer<float> trainer(mc, tc);
  trainer.LoadData(manifest);
  std::printf("loaded %zu utterances\n", trainer.items().size());
  const std::filesystem::path final_dir = trainer.Run(out_dir);
  std::printf("checkpoint: %s\n", final_dir.string().c_str());
  return kExitOk;
}

int RunSynth(const std::string &checkpoint, const std::string &manifest_path,
             const std::string &out_dir) {
  std::printf("synth: checkpoint=%s manifest=%s out=%s\n", checkpoint.c_str(),
              manifest_path.c_str(), out_dir.c_str());
  auto model = Model<float>::LoadFrom(checkpoint);
  std::printf("variant: %s\n", ToString(model->variant()).c_str());

  const auto records = ReadManifest(manifest_path);
  const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out(out_dir);

  for (const auto &rec : records) {
    const std::vector<int> tokens = Tokenize(rec.text);
    MatXf alpha;
    if (model->has_visual_encoder()) {
      alpha = model->EncodeVisual(LoadLips(rec, base));
    }
    const int t_v = static_cast<int>(rec.num_video_frames);
    SynthesisResult<float> res =
        model->Synthesize(tokens, alpha, t_v, rec.speaker_id);

    WriteTensor(MatrixToTensor(res.mel), out / (rec.utt_id + "_mel.tensor"));
    WriteTensor(MatrixToTensor(res.dec_attention),
                out / (rec.utt_id + "_dec_attn.tensor"));
    if (!res.tva_weights.empty()) {
      TvaOutput<float> weights;
      weights.weights = res.tva_weights;
      WriteTensor(model->tva_aligner()->WeightsToTensor(weights),
                  out / (rec.utt_id + "_tva.tensor"));
    }

    MelSpectrogram mel;
    mel.frames = res.mel;
    const VecXd wave = MelToWave(mel);
    WriteWavPcm16(out / (rec.utt_id + ".wav"), wave, kSampleRate);
    std::printf("%s: mel [%ld, %ld]\n", rec.utt_id.c_str(),
                static_cast<long>(res.mel.rows()), static_cast<long>(res.mel.cols()));
  }
  return kExitOk;
}

int RunEval(const std::string &manifest_path, const std::string &synth_dir,
            const std::string &report_path) {
  std::printf("eval: manifest=%s synth-dir=%s report=%s\n", manifest_path.c_str(),
              synth_dir.c_str(), report_path.c_str());
  const auto records = ReadManifest(manifest_path);
  const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
  const std::filesystem::path synth(synth_dir);

  std::ofstream report(report_path);
  if (!report) throw IoError("cannot open report file " + report_path);

  int worst = kExitOk;
  int n_ok = 0;
  double sum_fd = 0, sum_dist = 0, sum_conf = 0, sum_off = 0;
  for (const auto &rec : records) {
    try {
      const MelSpectrogram reference = LoadMel(rec, base);
      const LipSequence lips = LoadLips(rec, base);
      const std::filesystem::path mel_file = synth / (rec.utt_id + "_mel.tensor");
      if (!std::filesystem::exists(mel_file)) {
        throw DataError(rec.utt_id + ": no synthesized mel at " + mel_file.string());
      }
      MelSpectrogram synth_mel = MelSpectrogram::FromTensor(ReadTensor(mel_file));
      CheckLengthContract(rec.utt_id, rec.num_video_frames, synth_mel.length());

      const double fd = FrameDisturbance(synth_mel, reference);
      // Short clips cannot support the full offset range; shrink it so the
      // sliding scan always has data.
      const int max_offset =
          std::min(15, (static_cast<int>(rec.num_video_frames) - 1) / 2);
      const SyncScore sync = SyncProxy(synth_mel, lips, max_offset);
      if (!std::isfinite(fd) || !std::isfinite(sync.distance_like) ||
          !std::isfinite(sync.confidence_like)) {
        throw NumericError(rec.utt_id + ": non-finite metric");
      }

      nlohmann::ordered_json row;
      row["utt_id"] = rec.utt_id;
      row["fd"] = fd;
      row["distance_like"] = sync.distance_like;
      row["confidence_like"] = sync.confidence_like;
      row["best_offset"] = sync.best_offset;
      report << row.dump() << '\n';

      ++n_ok;
      sum_fd += fd;
      sum_dist += sync.distance_like;
      sum_conf += sync.confidence_like;
      sum_off += sync.best_offset;
    } catch (const NumericError &e) {
      std::fprintf(stderr, "eval failure: %s\n", e.what());
      worst = std::max(worst, kExitNumeric);
    } catch (const Error &e) {
      std::fprintf(stderr, "eval failure: %s\n", e.what());
      worst = std::max(worst, kExitValidation);
    }
  }

  if (n_ok > 0) {
    nlohmann::ordered_json row;
    row["utt_id"] = "summary";
    row["fd"] = sum_fd / n_ok;
    row["distance_like"] = sum_dist / n_ok;
    row["confidence_like"] = sum_conf / n_ok;
    row["best_offset"] = sum_off / n_ok;
    report << row.dump() << '\n';
    std::printf("summary: %s\n", row.dump().c_str());
  }
  report.flush();
  if (!report) throw IoError("failed writing report " + report_path);
  std::printf("evaluated %d/%zu utterances\n", n_ok, records.size());
  return worst;
}

int RunGradCheck(const std::string &component, double epsilon) {
  std::printf("grad-check: component=%s epsilon=%g\n", component.c_str(), epsilon);
  const double err = GradCheck(ParseGradCheckComponent(component), epsilon);
  std::printf("max relative error: %.3e\n", err);
  return kExitOk;
}

}  // namespace
}  // namespace visualtts

int main(int argc, char **argv) {
  CLI::App app{"VisualTTS: lip-synchronized text-to-speech"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int n_utts = 32;
  int n_speakers = 4;
  std::string out_dir, config_path, manifest, checkpoint, synth_dir, report;
  std::string component;
  double epsilon = 1e-4;

  CLI::App *make_toy = app.add_subcommand("make-toy-data", "Generate a synthetic corpus");
  make_toy->add_option("--seed", seed, "Dataset seed")->capture_default_str();
  make_toy->add_option("--n-utts", n_utts, "Number of utterances")->capture_default_str();
  make_toy->add_option("--n-speakers", n_speakers, "Number of speakers")
      ->capture_default_str();
  make_toy->add_option("--out", out_dir, "Output directory")->required();

  CLI::App *train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", config_path, "Training config JSON file")->required();
  train->add_option("--manifest", manifest, "Dataset manifest")->required();
  train->add_option("--out", out_dir, "Output directory for checkpoints and logs")
      ->required();

  CLI::App *synth = app.add_subcommand("synth", "Synthesize mels, alignments and wavs");
  synth->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  synth->add_option("--manifest", manifest, "Dataset manifest")->required();
  synth->add_option("--out", out_dir, "Output directory")->required();

  CLI::App *eval = app.add_subcommand("eval", "Score synthesized utterances");
  eval->add_option("--manifest", manifest, "Dataset manifest")->required();
  eval->add_option("--synth-dir", synth_dir, "Directory written by synth")->required();
  eval->add_option("--report", report, "Report file (JSON lines)")->required();

  CLI::App *grad = app.add_subcommand("grad-check", "Verify gradients numerically");
  grad->add_option("--component", component,
                   "One of tva, fusion, decoder_step, end_to_end_tiny")
      ->required();
  grad->add_option("--epsilon", epsilon, "Finite-difference step")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return visualtts::kExitValidation;
  }

  try {
    if (make_toy->parsed()) {
      return visualtts::RunMakeToyData(seed, n_utts, n_speakers, out_dir);
    }
    if (train->parsed()) {
      return visualtts::RunTrain(config_path, manifest, out_dir);
    }
    if (synth->parsed()) {
      return visualtts::RunSynth(checkpoint, manifest, out_dir);
    }
    if (eval->parsed()) {
      return visualtts::RunEval(manifest, synth_dir, report);
    }
    if (grad->parsed()) {
      return visualtts::RunGradCheck(component, epsilon);
    }
  } catch (const visualtts::NumericError &e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return visualtts::kExitNumeric;
  } catch (const visualtts::Error &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return visualtts::kExitValidation;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return visualtts::kExitNumeric;
  }
  return visualtts::kExitOk;
}
