// include/visualtts/tva.h

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

#ifndef VISUALTTS_TVA_H_
#define VISUALTTS_TVA_H_

#include <cmath>
#include <string>
#include <vector>

#include "visualtts/config.h"
#include "visualtts/nn.h"

namespace visualtts {

// Textual-visual attention: multi-head scaled dot-product attention with
// text-derived queries and visual-derived keys and values.  Per head,
// Q = beta W_Q^T, K = alpha W_K^T, V = alpha W_V^T, weights =
// row_softmax(Q K^T / sqrt(head_dim)), head output = weights V.  Heads are
// concatenated and linearly mapped to tva_out_dim.  No masking, no dropout.
//
// The visual stream is produced by a frozen encoder, so Backward propagates
// into beta and the parameters but not into alpha.

template <typename S>
struct TvaCache {
  MatX<S> beta, alpha;
  std::vector<MatX<S>> q, k, v, weights;  // per head
  MatX<S> concat;                         // T_t x heads*head_dim
};

template <typename S>
struct TvaOutput {
  MatX<S> context;                 // T_t x tva_out_dim
  std::vector<MatX<S>> weights;    // per head, T_t x T_v
};

template <typename S>
class TvaAligner {
 public:
  TvaAligner(const ModelConfig &cfg, nn::ParamRegistry<S> &reg) : cfg_(cfg) {
    for (int h = 0; h < cfg.tva_heads; ++h) {
      const std::string prefix = "tva.head" + std::to_string(h);
      wq_.push_back(reg.Add(prefix + ".wq", cfg.tva_head_dim, cfg.text_dim()));
      wk_.push_back(reg.Add(prefix + ".wk", cfg.tva_head_dim, cfg.visual_dim));
      wv_.push_back(reg.Add(prefix + ".wv", cfg.tva_head_dim, cfg.visual_dim));
    }
    wo_ = reg.Add("tva.out.w", cfg.tva_out_dim, cfg.tva_heads * cfg.tva_head_dim);
    bo_ = reg.Add("tva.out.b", cfg.tva_out_dim, 1);
  }

  void Init(std::mt19937 &rng) {
    for (int h = 0; h < cfg_.tva_heads; ++h) {
      nn::GlorotInit(wq_[static_cast<std::size_t>(h)], rng);
      nn::GlorotInit(wk_[static_cast<std::size_t>(h)], rng);
      nn::GlorotInit(wv_[static_cast<std::size_t>(h)], rng);
    }
    nn::GlorotInit(wo_, rng);
  }

  TvaOutput<S> Forward(const MatX<S> &beta, const MatX<S> &alpha,
                       TvaCache<S> *cache) const {
    if (beta.rows() == 0 || alpha.rows() == 0) {
      throw ValidationError("attention over empty text or video");
    }
    if (beta.cols() != cfg_.text_dim() || alpha.cols() != cfg_.visual_dim) {
      throw ValidationError("attention input widths do not match the model");
    }
    CheckFinite(beta, "textual embedding");
    CheckFinite(alpha, "visual embedding");

    const S scale = S(1) / static_cast<S>(std::sqrt(static_cast<double>(cfg_.tva_head_dim)));
    const auto heads = static_cast<std::size_t>(cfg_.tva_heads);

    TvaCache<S> local;
    TvaCache<S> &cc = cache != nullptr ? *cache : local;
    cc.beta = beta;
    cc.alpha = alpha;
    cc.q.resize(heads);
    cc.k.resize(heads);
    cc.v.resize(heads);
    cc.weights.resize(heads);
    cc.concat.resize(beta.rows(), cfg_.tva_heads * cfg_.tva_head_dim);

    TvaOutput<S> out;
    out.weights.resize(heads);
    for (std::size_t h = 0; h < heads; ++h) {
      cc.q[h].noalias() = beta * wq_[h]->value.transpose();
      cc.k[h].noalias() = alpha * wk_[h]->value.transpose();
      cc.v[h].noalias() = alpha * wv_[h]->value.transpose();
      MatX<S> scores = cc.q[h] * cc.k[h].transpose() * scale;
      cc.weights[h] = nn::SoftmaxRows(scores);
      out.weights[h] = cc.weights[h];
      cc.concat.block(0, static_cast<Eigen::Index>(h) * cfg_.tva_head_dim,
                      beta.rows(), cfg_.tva_head_dim)
          .noalias() = cc.weights[h] * cc.v[h];
    }
    out.context.noalias() = cc.concat * wo_->value.transpose();
    out.context.rowwise() += bo_->value.col(0).transpose();
    return out;
  }

  // Returns d_beta; alpha receives no gradient (frozen upstream).
  MatX<S> Backward(const TvaCache<S> &cc, const MatX<S> &d_context) {
    const S scale = S(1) / static_cast<S>(std::sqrt(static_cast<double>(cfg_.tva_head_dim)));
    nn::AccumulateWeightGrad(wo_, d_context, cc.concat);
    nn::AccumulateBiasGrad(bo_, d_context);
    const MatX<S> d_concat = d_context * wo_->value;

    MatX<S> d_beta = MatX<S>::Zero(cc.beta.rows(), cc.beta.cols());
    for (std::size_t h = 0; h < cc.q.size(); ++h) {
      const MatX<S> d_head = d_concat.block(
          0, static_cast<Eigen::Index>(h) * cfg_.tva_head_dim, cc.beta.rows(),
          cfg_.tva_head_dim);
      const MatX<S> d_weights = d_head * cc.v[h].transpose();
      const MatX<S> d_v = cc.weights[h].transpose() * d_head;
      const MatX<S> d_scores =
          nn::SoftmaxRowsBackward(cc.weights[h], d_weights) * scale;
      const MatX<S> d_q = d_scores * cc.k[h];
      const MatX<S> d_k = d_scores.transpose() * cc.q[h];

      nn::AccumulateWeightGrad(wq_[h], d_q, cc.beta);
      nn::AccumulateWeightGrad(wk_[h], d_k, cc.alpha);
      nn::AccumulateWeightGrad(wv_[h], d_v, cc.alpha);
      d_beta.noalias() += d_q * wq_[h]->value;
    }
    return d_beta;
  }

  // [heads x T_t x T_v] tensor of attention weights for export.
  NdArray WeightsToTensor(const TvaOutput<S> &out) const {
    const Eigen::Index t_t = out.weights.front().rows();
    const Eigen::Index t_v = out.weights.front().cols();
    NdArray t;
    t.dims = {static_cast<std::uint32_t>(out.weights.size()),
              static_cast<std::uint32_t>(t_t), static_cast<std::uint32_t>(t_v)};
    t.data.reserve(out.weights.size() * static_cast<std::size_t>(t_t * t_v));
    for (const MatX<S> &w : out.weights) {
      for (Eigen::Index i = 0; i < t_t; ++i) {
        for (Eigen::Index j = 0; j < t_v; ++j) {
          t.data.push_back(static_cast<float>(w(i, j)));
        }
      }
    }
    return t;
  }

 private:
  ModelConfig cfg_;
  std::vector<nn::Param<S> *> wq_, wk_, wv_;
  nn::Param<S> *wo_ = nullptr, *bo_ = nullptr;
};

}  // namespace visualtts

#endif  // VISUALTTS_TVA_H_
