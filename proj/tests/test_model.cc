// tests/test_model.cc

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

#include <random>
#include <vector>

#include <doctest.h>

#include "visualtts/model.h"
#include "test_util.h"

using namespace visualtts;

namespace {

MatXf RandomAlpha(Eigen::Index t_v, const ModelConfig &cfg, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  MatXf m(t_v, cfg.visual_dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("synthesis is deterministic and emits four mel frames per video frame") {
  const ModelConfig cfg = ModelConfig::Scaled();
  Model<float> model(cfg, ModelVariant::kVisualTts, 30);

  const std::vector<int> tokens = {2, 5, 9, 4};
  const int t_v = 3;
  const MatXf alpha = RandomAlpha(t_v, cfg, 300);
  const SynthesisResult<float> a = model.Synthesize(tokens, alpha, t_v, 1);
  CHECK(a.mel.rows() == 4 * t_v);
  CHECK(a.mel.cols() == cfg.num_mels);
  CHECK(a.dec_attention.rows() == 2 * t_v);
  CHECK(a.dec_attention.cols() == 4);  // one column per token
  REQUIRE(a.tva_weights.size() == static_cast<std::size_t>(cfg.tva_heads));
  CHECK(a.tva_weights[0].rows() == 4);
  CHECK(a.tva_weights[0].cols() == t_v);

  const SynthesisResult<float> b = model.Synthesize(tokens, alpha, t_v, 1);
  CHECK(a.mel == b.mel);
  CHECK(a.dec_attention == b.dec_attention);
}

TEST_CASE("a checkpoint round trip reproduces the synthesis bit for bit") {
  testing::TempDir tmp("model");
  const ModelConfig cfg = ModelConfig::Scaled();
  Model<float> model(cfg, ModelVariant::kVisualTts, 31);
  model.speaker_encoder().ImportVector(2, VecXf::LinSpaced(cfg.spk_dim, 0.0f, 1.0f));

  const std::vector<int> tokens = {7, 7, 3};
  const MatXf alpha = RandomAlpha(2, cfg, 310);
  const SynthesisResult<float> before = model.Synthesize(tokens, alpha, 2, 2);

  model.SaveCheckpoint(tmp.path());
  auto loaded = Model<float>::LoadFrom(tmp.path());
  CHECK(loaded->variant() == ModelVariant::kVisualTts);
  CHECK(loaded->config().enc_lstm_dim == cfg.enc_lstm_dim);
  CHECK(loaded->speaker_encoder().IsImported(2));
  CHECK_FALSE(loaded->speaker_encoder().IsImported(1));

  const SynthesisResult<float> after = loaded->Synthesize(tokens, alpha, 2, 2);
  CHECK(before.mel == after.mel);
  CHECK(before.dec_attention == after.dec_attention);

  auto &a = model.registry().params();
  auto &b = loaded->registry().params();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->name == b[i]->name);
    CHECK(a[i]->value == b[i]->value);
  }
}

TEST_CASE("the loader rejects checkpoints that do not cover the model") {
  testing::TempDir tmp("model");
  const ModelConfig cfg = ModelConfig::Scaled();
  Model<float> model(cfg, ModelVariant::kTacotron, 32);
  model.SaveCheckpoint(tmp.path());

  auto index = ReadParamIndex((tmp.path() / "index.txt").string());
  SUBCASE("a missing entry") {
    index.pop_back();
    WriteParamIndex((tmp.path() / "index.txt").string(), index);
    CHECK_THROWS_AS(Model<float>::LoadFrom(tmp.path()), FormatError);
  }
  SUBCASE("an entry for a parameter the model does not have") {
    index.emplace_back("no.such.param", index.front().second);
    WriteParamIndex((tmp.path() / "index.txt").string(), index);
    CHECK_THROWS_AS(Model<float>::LoadFrom(tmp.path()), FormatError);
  }
  SUBCASE("a tensor with the wrong shape") {
    NdArray arr;
    arr.dims = {2, 2};
    arr.data = {0.0f, 0.0f, 0.0f, 0.0f};
    WriteTensor(arr, tmp.path() / index.front().second);
    CHECK_THROWS_AS(Model<float>::LoadFrom(tmp.path()), FormatError);
  }
  SUBCASE("a deleted tensor file") {
    std::filesystem::remove(tmp.path() / index.front().second);
    CHECK_THROWS_AS(Model<float>::LoadFrom(tmp.path()), Error);
  }
}

TEST_CASE("the text-only variant refuses visual conditioning") {
  const ModelConfig cfg = ModelConfig::Scaled();
  Model<float> model(cfg, ModelVariant::kTacotron, 33);
  CHECK_FALSE(model.has_visual_encoder());
  CHECK(model.tva_aligner() == nullptr);

  const std::vector<int> tokens = {1, 2, 3};
  CHECK_THROWS_AS(model.Synthesize(tokens, RandomAlpha(2, cfg, 330), 2, 0),
                  ValidationError);
  const SynthesisResult<float> out = model.Synthesize(tokens, MatXf(), 2, 0);
  CHECK(out.mel.rows() == 8);
  CHECK(out.tva_weights.empty());
}

TEST_CASE("the visual variants carry an encoder and align over video frames") {
  const ModelConfig cfg = ModelConfig::Scaled();
  Model<float> full(cfg, ModelVariant::kVisualTts, 34);
  Model<float> mid(cfg, ModelVariant::kTacotronTva, 34);
  CHECK(full.has_visual_encoder());
  CHECK(mid.has_visual_encoder());
  CHECK(mid.tva_aligner() != nullptr);

  const SynthesisResult<float> out =
      mid.Synthesize({1, 2}, RandomAlpha(3, cfg, 340), 3, 0);
  CHECK(out.mel.rows() == 12);
  REQUIRE_FALSE(out.tva_weights.empty());
  CHECK(out.tva_weights[0].cols() == 3);
}

TEST_CASE("teacher forcing validates the target length and conditioning") {
  const ModelConfig cfg = ModelConfig::Scaled();
  Model<float> model(cfg, ModelVariant::kVisualTts, 35);
  std::mt19937 rng(350);
  const std::vector<int> tokens = {4, 5};
  const MatXf alpha = RandomAlpha(2, cfg, 351);

  CHECK_THROWS_AS(model.TeacherForcedForward(tokens, alpha, 0, MatXf::Zero(6, 80),
                                             RunMode::kTrain, rng, nullptr),
                  DataError);
  CHECK_THROWS_AS(model.TeacherForcedForward(tokens, alpha, 0, MatXf(),
                                             RunMode::kTrain, rng, nullptr),
                  DataError);
  // eight target frames mean two video frames, so three alpha rows are wrong
  CHECK_THROWS_AS(model.TeacherForcedForward(tokens, RandomAlpha(3, cfg, 352), 0,
                                             MatXf::Zero(8, 80), RunMode::kTrain,
                                             rng, nullptr),
                  ValidationError);
  CHECK_THROWS_AS(model.TeacherForcedForward(tokens, alpha, cfg.num_speakers,
                                             MatXf::Zero(8, 80), RunMode::kTrain,
                                             rng, nullptr),
                  ValidationError);

  const MatXf pred = model.TeacherForcedForward(tokens, alpha, 0, MatXf::Zero(8, 80),
                                                RunMode::kTrain, rng, nullptr);
  CHECK(pred.rows() == 8);
  CHECK(pred.cols() == cfg.num_mels);
  CHECK(pred.allFinite());
}

TEST_CASE("the mean absolute error and its gradient") {
  MatXf pred(2, 2), target(2, 2);
  pred << 1.0f, 2.0f,
          3.0f, 4.0f;
  target << 0.0f, 2.0f,
            5.0f, 1.0f;
  CHECK(Model<float>::L1Loss(pred, target) == doctest::Approx(6.0 / 4.0));
  const MatXf g = Model<float>::L1LossGrad(pred, target);
  MatXf want(2, 2);
  want << 0.25f, 0.0f,
          -0.25f, 0.25f;
  CHECK(g == want);
  CHECK_THROWS_AS(Model<float>::L1Loss(pred, MatXf::Zero(1, 2)), ValidationError);
}

TEST_SUITE_END();
