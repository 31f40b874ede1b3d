// tests/test_training.cc

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

#include <fstream>
#include <regex>
#include <string>
#include <vector>

#include <doctest.h>

#include "visualtts/toy_data.h"
#include "visualtts/trainer.h"
#include "test_util.h"

using namespace visualtts;

namespace {

std::filesystem::path SmallDataset(const std::filesystem::path &dir,
                                   std::uint64_t seed) {
  ToyDatasetOptions opt;
  opt.seed = seed;
  opt.num_utterances = 4;
  opt.num_speakers = 2;
  return MakeToyDataset(opt, dir);
}

std::vector<std::string> ReadLines(const std::filesystem::path &p) {
  std::ifstream is(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

TrainConfig QuickConfig(int steps) {
  TrainConfig tc;
  tc.model_variant = ModelVariant::kVisualTts;
  tc.batch_size = 2;
  tc.max_steps = steps;
  tc.seed = 9;
  tc.toy_scale = true;
  return tc;
}

}  // namespace

TEST_SUITE_BEGIN("training");

TEST_CASE("a few dozen steps shrink the loss on a four-utterance set") {
  testing::TempDir tmp("train_loss");
  const auto manifest = SmallDataset(tmp.path() / "data", 900);

  Trainer<float> trainer(ModelConfig::Scaled(), QuickConfig(30));
  trainer.LoadData(manifest);
  CHECK(trainer.items().size() == 4);

  std::vector<float> losses;
  for (int i = 0; i < 30; ++i) losses.push_back(trainer.Step());
  const float first = (losses[0] + losses[1] + losses[2]) / 3.0f;
  const float last = (losses[27] + losses[28] + losses[29]) / 3.0f;
  CHECK(last < 0.95f * first);
}

TEST_CASE("the same seed trains to the same log, a different seed does not") {
  testing::TempDir tmp("train_det");
  const auto manifest = SmallDataset(tmp.path() / "data", 901);

  auto run = [&](const std::string &name, std::uint64_t seed) {
    TrainConfig tc = QuickConfig(6);
    tc.seed = seed;
    Trainer<float> trainer(ModelConfig::Scaled(), tc);
    trainer.LoadData(manifest);
    trainer.Run(tmp.path() / name);
    return testing::ReadAllBytes(tmp.path() / name / "loss_log.tsv");
  };

  const auto a = run("a", 5);
  const auto b = run("b", 5);
  const auto c = run("c", 6);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("training leaves the visual tower untouched and moves the rest") {
  testing::TempDir tmp("train_frozen");
  const auto manifest = SmallDataset(tmp.path() / "data", 902);

  Trainer<float> trainer(ModelConfig::Scaled(), QuickConfig(4));
  trainer.LoadData(manifest);

  std::vector<MatXf> visual_before;
  std::vector<std::string> visual_names;
  MatXf text_before;
  for (const auto &p : trainer.model().registry().params()) {
    if (p->name.rfind("visual.", 0) == 0) {
      visual_before.push_back(p->value);
      visual_names.push_back(p->name);
    }
    if (p->name == "text.embedding") text_before = p->value;
  }
  REQUIRE_FALSE(visual_before.empty());
  REQUIRE(text_before.size() > 0);

  for (int i = 0; i < 4; ++i) trainer.Step();

  std::size_t vi = 0;
  for (const auto &p : trainer.model().registry().params()) {
    if (p->name.rfind("visual.", 0) == 0) {
      CHECK(p->value == visual_before[vi]);
      ++vi;
    }
    if (p->name == "text.embedding") {
      CHECK((p->value - text_before).cwiseAbs().maxCoeff() > 0.0f);
    }
  }
  CHECK(vi == visual_before.size());
}

TEST_CASE("checkpoints appear on the configured cadence plus a final one") {
  testing::TempDir tmp("train_ckpt");
  const auto manifest = SmallDataset(tmp.path() / "data", 903);

  TrainConfig tc = QuickConfig(5);
  tc.checkpoint_every = 2;
  Trainer<float> trainer(ModelConfig::Scaled(), tc);
  trainer.LoadData(manifest);
  const auto final_dir = trainer.Run(tmp.path() / "run");

  CHECK(std::filesystem::exists(tmp.path() / "run" / "step_000002" / "index.txt"));
  CHECK(std::filesystem::exists(tmp.path() / "run" / "step_000004" / "index.txt"));
  CHECK_FALSE(std::filesystem::exists(tmp.path() / "run" / "step_000005"));
  CHECK(final_dir == tmp.path() / "run" / "final");
  const ModelMeta meta = ReadModelMeta((final_dir / "config.json").string());
  CHECK(meta.variant == ModelVariant::kVisualTts);
}

TEST_CASE("the loss log holds one fixed-point line per step") {
  testing::TempDir tmp("train_log");
  const auto manifest = SmallDataset(tmp.path() / "data", 904);

  Trainer<float> trainer(ModelConfig::Scaled(), QuickConfig(3));
  trainer.LoadData(manifest);
  trainer.Run(tmp.path() / "run");

  const auto lines = ReadLines(tmp.path() / "run" / "loss_log.tsv");
  REQUIRE(lines.size() == 3);
  const std::regex pattern(R"(^[0-9]+\t[0-9]+\.[0-9]{6}$)");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    CHECK(std::regex_match(lines[i], pattern));
    CHECK(lines[i].substr(0, lines[i].find('\t')) == std::to_string(i + 1));
  }
}

TEST_CASE("an empty manifest is refused up front") {
  testing::TempDir tmp("train_empty");
  const auto manifest = tmp.path() / "manifest.jsonl";
  std::ofstream(manifest).close();
  Trainer<float> trainer(ModelConfig::Scaled(), QuickConfig(1));
  CHECK_THROWS_AS(trainer.LoadData(manifest), FormatError);
}

TEST_CASE("train settings are validated before anything runs") {
  TrainConfig tc = QuickConfig(1);
  tc.learning_rate = 0.0;
  CHECK_THROWS_AS(Trainer<float>(ModelConfig::Scaled(), tc), ValidationError);
  tc = QuickConfig(0);
  CHECK_THROWS_AS(Trainer<float>(ModelConfig::Scaled(), tc), ValidationError);
  tc = QuickConfig(1);
  tc.batch_size = 0;
  CHECK_THROWS_AS(Trainer<float>(ModelConfig::Scaled(), tc), ValidationError);
}

TEST_SUITE_END();
