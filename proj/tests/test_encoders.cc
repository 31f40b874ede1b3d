// tests/test_encoders.cc

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

#include "visualtts/config.h"
#include "visualtts/speaker.h"
#include "visualtts/text_encoder.h"
#include "visualtts/visual_encoder.h"

using namespace visualtts;

namespace {

LipSequence RandomLips(std::size_t frames, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  LipSequence lips(frames);
  for (float &v : lips.data) v = dist(rng);
  return lips;
}

}  // namespace

TEST_SUITE_BEGIN("encoders");

TEST_CASE("text encoder emits one row per token and is deterministic") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  TextEncoder<float> enc(cfg, reg);
  std::mt19937 rng(1);
  enc.Init(rng);

  const std::vector<int> tokens = {3, 7, 1, 12, 7};
  TextEncoderCache<float> cache;
  const MatXf a = enc.Forward(tokens, /*batch_stats=*/true, &cache);
  CHECK(a.rows() == 5);
  CHECK(a.cols() == cfg.text_dim());
  CHECK(a.allFinite());

  TextEncoderCache<float> cache2;
  const MatXf b = enc.Forward(tokens, true, &cache2);
  CHECK(a == b);
}

TEST_CASE("text encoder sees the whole utterance in both directions") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  TextEncoder<float> enc(cfg, reg);
  std::mt19937 rng(2);
  enc.Init(rng);

  std::vector<int> tokens = {3, 7, 1, 12, 7, 2};
  TextEncoderCache<float> c1, c2;
  const MatXf a = enc.Forward(tokens, true, &c1);
  tokens.back() = 9;  // only the last symbol changes
  const MatXf b = enc.Forward(tokens, true, &c2);
  // the backward lstm carries the change all the way to the first row
  CHECK((a.row(0) - b.row(0)).cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("text encoder rejects empty input and out-of-vocabulary ids") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  TextEncoder<float> enc(cfg, reg);
  std::mt19937 rng(3);
  enc.Init(rng);

  TextEncoderCache<float> cache;
  CHECK_THROWS_AS(enc.Forward({}, true, &cache), ValidationError);
  CHECK_THROWS_AS(enc.Forward({0, cfg.vocab_size}, true, &cache), ValidationError);
  CHECK_THROWS_AS(enc.Forward({-1}, true, &cache), ValidationError);
}

TEST_CASE("visual encoder emits one embedding per frame, deterministically") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  VisualEncoder<float> enc(cfg, reg, /*frozen=*/true);
  std::mt19937 rng(4);
  enc.Init(rng);

  const LipSequence lips = RandomLips(3, 40);
  const MatXf a = enc.Forward(lips);
  CHECK(a.rows() == 3);
  CHECK(a.cols() == cfg.visual_dim);
  CHECK(a.allFinite());
  CHECK(a == enc.Forward(lips));
  // frames differ, so their embeddings should too
  CHECK((a.row(0) - a.row(1)).cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("visual stem is shift-equivariant in time away from the clip edges") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  VisualEncoder<float> enc(cfg, reg, true);
  std::mt19937 rng(5);
  enc.Init(rng);

  // two 7-frame clips cut one frame apart from the same 8-frame source
  const LipSequence source = RandomLips(8, 41);
  LipSequence clip_a(7), clip_b(7);
  std::copy(source.frame(0), source.frame(7), clip_a.data.begin());
  std::copy(source.frame(1), source.frame(8), clip_b.data.begin());

  const auto maps_a = enc.StemConvOutput(clip_a);
  const auto maps_b = enc.StemConvOutput(clip_b);
  // position t of clip A covers source frames t-2..t+2; position t-1 of
  // clip B covers the same ones, and both stay off the zero padding for t=3,4
  CHECK(maps_a[3] == maps_b[2]);
  CHECK(maps_a[4] == maps_b[3]);
  // at the edge the padding differs, so the maps must not be equal
  CHECK((maps_a[1] - maps_b[0]).cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("visual encoder refuses to be trainable") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  CHECK_THROWS_AS(VisualEncoder<float>(cfg, reg, /*frozen=*/false), ValidationError);
}

TEST_CASE("every visual parameter is registered frozen") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  VisualEncoder<float> enc(cfg, reg, true);
  CHECK(reg.params().size() > 0);
  for (const auto &p : reg.params()) {
    CHECK(p->frozen);
  }
}

TEST_CASE("speaker lookup validates ids and projects to the fusion width") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  SpeakerEncoder<float> spk(cfg, reg);
  std::mt19937 rng(6);
  spk.Init(rng);

  CHECK(spk.Lookup(0).size() == cfg.spk_dim);
  CHECK(spk.Project(cfg.num_speakers - 1).size() == cfg.spk_proj_dim);
  CHECK_THROWS_AS(spk.Lookup(-1), ValidationError);
  CHECK_THROWS_AS(spk.Lookup(cfg.num_speakers), ValidationError);
}

TEST_CASE("imported speaker vectors are returned verbatim and never trained") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  SpeakerEncoder<float> spk(cfg, reg);
  std::mt19937 rng(7);
  spk.Init(rng);

  VecXf vec = VecXf::LinSpaced(cfg.spk_dim, -1.0f, 1.0f);
  spk.ImportVector(3, vec);
  CHECK(spk.IsImported(3));
  CHECK_FALSE(spk.IsImported(2));
  CHECK(spk.Lookup(3) == vec);

  reg.ZeroGrads();
  const VecXf d = VecXf::Constant(cfg.spk_proj_dim, 1.0f);
  spk.Backward(3, d);
  spk.Backward(2, d);
  nn::Param<float> *table = reg.Find("speaker.table");
  REQUIRE(table != nullptr);
  CHECK(table->grad.row(3).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(table->grad.row(2).cwiseAbs().maxCoeff() > 0.0f);
  // the shared projection still learns from utterances of imported speakers
  nn::Param<float> *proj = reg.Find("speaker.proj.w");
  REQUIRE(proj != nullptr);
  CHECK(proj->grad.cwiseAbs().maxCoeff() > 0.0f);

  CHECK_THROWS_AS(spk.ImportVector(1, VecXf::Zero(cfg.spk_dim + 1)), ValidationError);
  CHECK_THROWS_AS(spk.ImportVector(cfg.num_speakers, vec), ValidationError);
}

TEST_SUITE_END();
