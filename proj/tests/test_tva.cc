// tests/test_tva.cc

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

#include <cmath>
#include <random>

#include <doctest.h>

#include "visualtts/tva.h"

using namespace visualtts;

namespace {

MatXf RandomRows(Eigen::Index r, Eigen::Index c, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  MatXf m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("tva");

TEST_CASE("alignment weights are row-stochastic per head") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  TvaAligner<float> tva(cfg, reg);
  std::mt19937 rng(11);
  tva.Init(rng);

  const MatXf beta = RandomRows(4, cfg.text_dim(), 110);
  const MatXf alpha = RandomRows(6, cfg.visual_dim, 111);
  const TvaOutput<float> out = tva.Forward(beta, alpha, nullptr);

  CHECK(out.context.rows() == 4);
  CHECK(out.context.cols() == cfg.tva_out_dim);
  REQUIRE(out.weights.size() == static_cast<std::size_t>(cfg.tva_heads));
  for (const MatXf &w : out.weights) {
    CHECK(w.rows() == 4);
    CHECK(w.cols() == 6);
    CHECK(w.minCoeff() >= 0.0f);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      CHECK(std::abs(w.row(r).sum() - 1.0f) < 1e-5f);
    }
  }
}

TEST_CASE("a single video frame receives all the attention") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  TvaAligner<float> tva(cfg, reg);
  std::mt19937 rng(12);
  tva.Init(rng);

  const MatXf beta = RandomRows(3, cfg.text_dim(), 120);
  const MatXf alpha = RandomRows(1, cfg.visual_dim, 121);
  const TvaOutput<float> out = tva.Forward(beta, alpha, nullptr);
  for (const MatXf &w : out.weights) {
    CHECK(w == MatXf::Ones(3, 1));
  }
}

TEST_CASE("scores are scaled by the square root of the head width") {
  // With one-hot embeddings wired through identity-like projections the
  // raw dot products are 2 and 1, so the weights must be
  // softmax([2, 1] / sqrt(256)) = [sigmoid(1/16), 1 - sigmoid(1/16)].
  const ModelConfig cfg;  // full-size: tva_head_dim = 256
  nn::ParamRegistry<float> reg;
  TvaAligner<float> tva(cfg, reg);  // params stay zero
  reg.Find("tva.head0.wq")->value(0, 0) = 1.0f;
  reg.Find("tva.head0.wk")->value(0, 0) = 1.0f;

  MatXf beta = MatXf::Zero(1, cfg.text_dim());
  beta(0, 0) = 1.0f;
  MatXf alpha = MatXf::Zero(2, cfg.visual_dim);
  alpha(0, 0) = 2.0f;
  alpha(1, 0) = 1.0f;

  const TvaOutput<float> out = tva.Forward(beta, alpha, nullptr);
  const double expect = 1.0 / (1.0 + std::exp(-1.0 / 16.0));
  CHECK(out.weights[0](0, 0) == doctest::Approx(expect).epsilon(1e-4));
  CHECK(out.weights[0](0, 1) == doctest::Approx(1.0 - expect).epsilon(1e-4));
  // the second head has zero projections, so its scores tie and split evenly
  CHECK(out.weights[1](0, 0) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("permuting video frames permutes weights but not the context") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  TvaAligner<float> tva(cfg, reg);
  std::mt19937 rng(13);
  tva.Init(rng);

  const MatXf beta = RandomRows(3, cfg.text_dim(), 130);
  const MatXf alpha = RandomRows(5, cfg.visual_dim, 131);
  MatXf reversed(5, cfg.visual_dim);
  for (Eigen::Index t = 0; t < 5; ++t) reversed.row(t) = alpha.row(4 - t);

  const TvaOutput<float> a = tva.Forward(beta, alpha, nullptr);
  const TvaOutput<float> b = tva.Forward(beta, reversed, nullptr);
  for (std::size_t h = 0; h < a.weights.size(); ++h) {
    for (Eigen::Index t = 0; t < 5; ++t) {
      CHECK(a.weights[h].col(t).isApprox(b.weights[h].col(4 - t), 1e-5f));
    }
  }
  CHECK(a.context.isApprox(b.context, 1e-4f));
}

TEST_CASE("mismatched widths and empty inputs are rejected") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  TvaAligner<float> tva(cfg, reg);
  std::mt19937 rng(14);
  tva.Init(rng);

  const MatXf beta = RandomRows(2, cfg.text_dim(), 140);
  const MatXf alpha = RandomRows(2, cfg.visual_dim, 141);
  CHECK_THROWS_AS(tva.Forward(MatXf(0, cfg.text_dim()), alpha, nullptr),
                  ValidationError);
  CHECK_THROWS_AS(tva.Forward(beta, MatXf(0, cfg.visual_dim), nullptr),
                  ValidationError);
  CHECK_THROWS_AS(tva.Forward(RandomRows(2, cfg.text_dim() + 1, 142), alpha, nullptr),
                  ValidationError);
  CHECK_THROWS_AS(tva.Forward(beta, RandomRows(2, cfg.visual_dim - 1, 143), nullptr),
                  ValidationError);
}

TEST_CASE("weights export as a head by text by video tensor") {
  const ModelConfig cfg = ModelConfig::Scaled();
  nn::ParamRegistry<float> reg;
  TvaAligner<float> tva(cfg, reg);
  std::mt19937 rng(15);
  tva.Init(rng);

  const MatXf beta = RandomRows(3, cfg.text_dim(), 150);
  const MatXf alpha = RandomRows(4, cfg.visual_dim, 151);
  const TvaOutput<float> out = tva.Forward(beta, alpha, nullptr);
  const NdArray arr = tva.WeightsToTensor(out);
  REQUIRE(arr.dims == std::vector<std::uint32_t>{2, 3, 4});
  // head-major, then text rows, then video columns
  CHECK(arr.data[0] == out.weights[0](0, 0));
  CHECK(arr.data[4 + 2] == out.weights[0](1, 2));
  CHECK(arr.data[12 + 5] == out.weights[1](1, 1));
}

TEST_SUITE_END();
