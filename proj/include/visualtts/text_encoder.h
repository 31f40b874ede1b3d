// include/visualtts/text_encoder.h

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

#ifndef VISUALTTS_TEXT_ENCODER_H_
#define VISUALTTS_TEXT_ENCODER_H_

#include <string>
#include <vector>

#include "visualtts/config.h"
#include "visualtts/nn.h"

namespace visualtts {

// Character encoder: embedding, convolution bank with max pooling, two
// projection convolutions with a residual back to the embedding, a highway
// stack, and a bidirectional LSTM.  Output is [T x 2 * enc_lstm_dim].
//
// Batch norm runs in one of two modes: batch statistics (training and
// gradient checking; Backward assumes this mode) or the running buffers
// (evaluation).  Folding batch statistics into the buffers is a separate,
// explicitly ordered call so that multi-utterance accumulation stays
// deterministic no matter how forward passes are scheduled.

template <typename S>
struct TextEncoderCache {
  std::vector<int> tokens;
  MatX<S> embedded;  // T x emb

  std::vector<nn::Conv1dCache<S>> bank_conv;
  std::vector<nn::BatchNormCache<S>> bank_bn;
  std::vector<MatX<S>> bank_relu_out;  // post-relu, doubles as the relu mask
  nn::MaxPoolCache<S> pool;

  nn::Conv1dCache<S> proj1_conv;
  nn::BatchNormCache<S> proj1_bn;
  MatX<S> proj1_out;  // post-relu
  nn::Conv1dCache<S> proj2_conv;
  nn::BatchNormCache<S> proj2_bn;

  std::vector<MatX<S>> highway_in;   // input per layer
  std::vector<MatX<S>> highway_h;    // post-relu transform branch
  std::vector<MatX<S>> highway_t;    // gate
  MatX<S> highway_out;

  std::vector<nn::LstmStepCache<S>> fwd_steps, bwd_steps;
};

template <typename S>
class TextEncoder {
 public:
  TextEncoder(const ModelConfig &cfg, nn::ParamRegistry<S> &reg) : cfg_(cfg) {
    const Eigen::Index emb = cfg.char_emb_dim;
    if (cfg.conv_proj_dim != cfg.char_emb_dim) {
      throw ValidationError(
          "conv_proj_dim must equal char_emb_dim for the residual connection");
    }
    embedding_ = reg.Add("text.embedding", cfg.vocab_size, emb);
    for (int k = 1; k <= cfg.conv_bank_size; ++k) {
      const std::string prefix = "text.bank" + std::to_string(k);
      bank_w_.push_back(reg.Add(prefix + ".w", cfg.conv_bank_channels, k * emb));
      bank_b_.push_back(reg.Add(prefix + ".b", cfg.conv_bank_channels, 1));
      bank_bn_.push_back(nn::AddBatchNorm(reg, prefix + ".bn",
                                          cfg.conv_bank_channels));
    }
    proj1_w_ = reg.Add("text.proj1.w", cfg.conv_proj_dim,
                       3 * cfg.conv_bank_size * cfg.conv_bank_channels);
    proj1_b_ = reg.Add("text.proj1.b", cfg.conv_proj_dim, 1);
    proj1_bn_ = nn::AddBatchNorm(reg, "text.proj1.bn", cfg.conv_proj_dim);
    proj2_w_ = reg.Add("text.proj2.w", cfg.conv_proj_dim, 3 * cfg.conv_proj_dim);
    proj2_b_ = reg.Add("text.proj2.b", cfg.conv_proj_dim, 1);
    proj2_bn_ = nn::AddBatchNorm(reg, "text.proj2.bn", cfg.conv_proj_dim);

    for (int l = 0; l < cfg.num_highway_layers; ++l) {
      const std::string prefix = "text.highway" + std::to_string(l);
      hw_h_w_.push_back(reg.Add(prefix + ".h.w", emb, emb));
      hw_h_b_.push_back(reg.Add(prefix + ".h.b", emb, 1));
      hw_t_w_.push_back(reg.Add(prefix + ".t.w", emb, emb));
      hw_t_b_.push_back(reg.Add(prefix + ".t.b", emb, 1));
    }

    fwd_ = nn::AddLstm(reg, "text.lstm_fwd", emb, cfg.enc_lstm_dim);
    bwd_ = nn::AddLstm(reg, "text.lstm_bwd", emb, cfg.enc_lstm_dim);
  }

  void Init(std::mt19937 &rng) {
    nn::NormalInit(embedding_, 0.3, rng);
    for (std::size_t k = 0; k < bank_w_.size(); ++k) {
      nn::GlorotInit(bank_w_[k], rng);
    }
    nn::GlorotInit(proj1_w_, rng);
    nn::GlorotInit(proj2_w_, rng);
    for (std::size_t l = 0; l < hw_h_w_.size(); ++l) {
      nn::GlorotInit(hw_h_w_[l], rng);
      nn::GlorotInit(hw_t_w_[l], rng);
      hw_t_b_[l]->value.setConstant(S(-1));  // start mostly carrying
    }
    for (auto *p : {fwd_.w, fwd_.u, bwd_.w, bwd_.u}) nn::GlorotInit(p, rng);
    // Forget-gate bias of 1 keeps early gradients flowing through time.
    fwd_.b->value.col(0).segment(cfg_.enc_lstm_dim, cfg_.enc_lstm_dim).setOnes();
    bwd_.b->value.col(0).segment(cfg_.enc_lstm_dim, cfg_.enc_lstm_dim).setOnes();
  }

  MatX<S> Forward(const std::vector<int> &tokens, bool batch_stats,
                  TextEncoderCache<S> *cache) const {
    if (tokens.empty()) throw ValidationError("textual encoder got no tokens");
    for (int id : tokens) {
      if (id < 0 || id >= cfg_.vocab_size) {
        throw ValidationError("token id " + std::to_string(id) +
                              " outside vocabulary of size " +
                              std::to_string(cfg_.vocab_size));
      }
    }
    const Eigen::Index t_len = static_cast<Eigen::Index>(tokens.size());
    const Eigen::Index emb = cfg_.char_emb_dim;

    TextEncoderCache<S> local;
    TextEncoderCache<S> &cc = cache != nullptr ? *cache : local;
    cc.tokens = tokens;

    MatX<S> e(t_len, emb);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      e.row(t) = embedding_->value.row(tokens[static_cast<std::size_t>(t)]);
    }
    cc.embedded = e;

    // Convolution bank.
    cc.bank_conv.resize(bank_w_.size());
    cc.bank_bn.resize(bank_w_.size());
    cc.bank_relu_out.resize(bank_w_.size());
    MatX<S> bank(t_len, static_cast<Eigen::Index>(bank_w_.size()) *
                            cfg_.conv_bank_channels);
    for (std::size_t k = 0; k < bank_w_.size(); ++k) {
      MatX<S> y = nn::Conv1dForward(e, *bank_w_[k], *bank_b_[k],
                                    static_cast<int>(k) + 1, &cc.bank_conv[k]);
      y = batch_stats ? nn::BatchNormForwardBatch(bank_bn_[k], y, &cc.bank_bn[k])
                      : nn::BatchNormForwardRunning(bank_bn_[k], y);
      cc.bank_relu_out[k] = nn::Relu(y);
      bank.block(0, static_cast<Eigen::Index>(k) * cfg_.conv_bank_channels, t_len,
                 cfg_.conv_bank_channels) = cc.bank_relu_out[k];
    }

    MatX<S> pooled = nn::MaxPool1dForward(bank, &cc.pool);

    MatX<S> p1 = nn::Conv1dForward(pooled, *proj1_w_, *proj1_b_, 3, &cc.proj1_conv);
    p1 = batch_stats ? nn::BatchNormForwardBatch(proj1_bn_, p1, &cc.proj1_bn)
                     : nn::BatchNormForwardRunning(proj1_bn_, p1);
    cc.proj1_out = nn::Relu(p1);

    MatX<S> p2 = nn::Conv1dForward(cc.proj1_out, *proj2_w_, *proj2_b_, 3,
                                   &cc.proj2_conv);
    p2 = batch_stats ? nn::BatchNormForwardBatch(proj2_bn_, p2, &cc.proj2_bn)
                     : nn::BatchNormForwardRunning(proj2_bn_, p2);

    MatX<S> x = p2 + e;  // residual to the embedding

    cc.highway_in.resize(static_cast<std::size_t>(cfg_.num_highway_layers));
    cc.highway_h.resize(static_cast<std::size_t>(cfg_.num_highway_layers));
    cc.highway_t.resize(static_cast<std::size_t>(cfg_.num_highway_layers));
    for (int l = 0; l < cfg_.num_highway_layers; ++l) {
      const auto li = static_cast<std::size_t>(l);
      cc.highway_in[li] = x;
      MatX<S> h = x * hw_h_w_[li]->value.transpose();
      h.rowwise() += hw_h_b_[li]->value.col(0).transpose();
      cc.highway_h[li] = nn::Relu(h);
      MatX<S> t_gate = x * hw_t_w_[li]->value.transpose();
      t_gate.rowwise() += hw_t_b_[li]->value.col(0).transpose();
      cc.highway_t[li] = nn::Sigmoid(t_gate);
      x = (cc.highway_h[li].array() * cc.highway_t[li].array() +
           x.array() * (S(1) - cc.highway_t[li].array()))
              .matrix();
    }
    cc.highway_out = x;

    // Bidirectional LSTM without zoneout: keep-old masks are all zero.
    const Eigen::Index h_dim = cfg_.enc_lstm_dim;
    const VecX<S> zero_mask = VecX<S>::Zero(h_dim);
    MatX<S> out(t_len, 2 * h_dim);
    cc.fwd_steps.resize(static_cast<std::size_t>(t_len));
    cc.bwd_steps.resize(static_cast<std::size_t>(t_len));
    VecX<S> h = VecX<S>::Zero(h_dim), c = VecX<S>::Zero(h_dim);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      nn::LstmForwardStep(fwd_, VecX<S>(x.row(t).transpose()), h, c, zero_mask,
                          zero_mask, &h, &c, &cc.fwd_steps[static_cast<std::size_t>(t)]);
      out.row(t).segment(0, h_dim) = h.transpose();
    }
    h.setZero();
    c.setZero();
    for (Eigen::Index t = t_len - 1; t >= 0; --t) {
      nn::LstmForwardStep(bwd_, VecX<S>(x.row(t).transpose()), h, c, zero_mask,
                          zero_mask, &h, &c, &cc.bwd_steps[static_cast<std::size_t>(t)]);
      out.row(t).segment(h_dim, h_dim) = h.transpose();
    }
    return out;
  }

  // Assumes the cache came from a batch-statistics forward pass.
  void Backward(const TextEncoderCache<S> &cc, const MatX<S> &dy) {
    const Eigen::Index t_len = dy.rows();
    const Eigen::Index h_dim = cfg_.enc_lstm_dim;
    const Eigen::Index emb = cfg_.char_emb_dim;

    // BiLSTM backward, one deferred GEMM per weight.
    MatX<S> dx = MatX<S>::Zero(t_len, emb);
    MatX<S> dpre_rows(t_len, 4 * h_dim);
    MatX<S> x_rows(t_len, emb);
    MatX<S> h_prev_rows(t_len, h_dim);
    {
      VecX<S> dh = VecX<S>::Zero(h_dim), dc = VecX<S>::Zero(h_dim);
      VecX<S> dxt, dh_prev, dc_prev, dpre;
      for (Eigen::Index t = t_len - 1; t >= 0; --t) {
        const auto &step = cc.fwd_steps[static_cast<std::size_t>(t)];
        dh += dy.row(t).segment(0, h_dim).transpose();
        nn::LstmBackwardStep(fwd_, step, dh, dc, &dxt, &dh_prev, &dc_prev, &dpre);
        dx.row(t) += dxt.transpose();
        dpre_rows.row(t) = dpre.transpose();
        x_rows.row(t) = step.x.transpose();
        h_prev_rows.row(t) = step.h_prev.transpose();
        dh = dh_prev;
        dc = dc_prev;
      }
      nn::AccumulateWeightGrad(fwd_.w, dpre_rows, x_rows);
      nn::AccumulateWeightGrad(fwd_.u, dpre_rows, h_prev_rows);
      nn::AccumulateBiasGrad(fwd_.b, dpre_rows);
    }
    {
      VecX<S> dh = VecX<S>::Zero(h_dim), dc = VecX<S>::Zero(h_dim);
      VecX<S> dxt, dh_prev, dc_prev, dpre;
      for (Eigen::Index t = 0; t < t_len; ++t) {
        const auto &step = cc.bwd_steps[static_cast<std::size_t>(t)];
        dh += dy.row(t).segment(h_dim, h_dim).transpose();
        nn::LstmBackwardStep(bwd_, step, dh, dc, &dxt, &dh_prev, &dc_prev, &dpre);
        dx.row(t) += dxt.transpose();
        dpre_rows.row(t) = dpre.transpose();
        x_rows.row(t) = step.x.transpose();
        h_prev_rows.row(t) = step.h_prev.transpose();
        dh = dh_prev;
        dc = dc_prev;
      }
      nn::AccumulateWeightGrad(bwd_.w, dpre_rows, x_rows);
      nn::AccumulateWeightGrad(bwd_.u, dpre_rows, h_prev_rows);
      nn::AccumulateBiasGrad(bwd_.b, dpre_rows);
    }

    // Highway stack.
    for (int l = cfg_.num_highway_layers - 1; l >= 0; --l) {
      const auto li = static_cast<std::size_t>(l);
      const MatX<S> &x_in = cc.highway_in[li];
      const MatX<S> &h_act = cc.highway_h[li];
      const MatX<S> &t_gate = cc.highway_t[li];

      const MatX<S> dh = (dx.array() * t_gate.array()).matrix();
      const MatX<S> dt =
          (dx.array() * (h_act.array() - x_in.array())).matrix();
      MatX<S> dx_next = (dx.array() * (S(1) - t_gate.array())).matrix();

      const MatX<S> dh_pre =
          (dh.array() * (h_act.array() > S(0)).template cast<S>()).matrix();
      const MatX<S> dt_pre =
          (dt.array() * t_gate.array() * (S(1) - t_gate.array())).matrix();

      nn::AccumulateWeightGrad(hw_h_w_[li], dh_pre, x_in);
      nn::AccumulateBiasGrad(hw_h_b_[li], dh_pre);
      nn::AccumulateWeightGrad(hw_t_w_[li], dt_pre, x_in);
      nn::AccumulateBiasGrad(hw_t_b_[li], dt_pre);

      dx_next.noalias() += dh_pre * hw_h_w_[li]->value;
      dx_next.noalias() += dt_pre * hw_t_w_[li]->value;
      dx = std::move(dx_next);
    }

    // Residual: gradient flows to both the projection stack and the embedding.
    MatX<S> d_embedded = dx;

    MatX<S> dp2 = nn::BatchNormBackward(proj2_bn_, cc.proj2_bn, dx);
    MatX<S> dp1 = nn::Conv1dBackward(*proj2_w_, *proj2_b_, cc.proj2_conv, dp2);
    dp1 = (dp1.array() * (cc.proj1_out.array() > S(0)).template cast<S>()).matrix();
    dp1 = nn::BatchNormBackward(proj1_bn_, cc.proj1_bn, dp1);
    MatX<S> dpool = nn::Conv1dBackward(*proj1_w_, *proj1_b_, cc.proj1_conv, dp1);

    MatX<S> dbank = nn::MaxPool1dBackward(cc.pool, dpool);

    for (std::size_t k = 0; k < bank_w_.size(); ++k) {
      MatX<S> dk = dbank.block(0, static_cast<Eigen::Index>(k) * cfg_.conv_bank_channels,
                               t_len, cfg_.conv_bank_channels);
      dk = (dk.array() * (cc.bank_relu_out[k].array() > S(0)).template cast<S>())
               .matrix();
      dk = nn::BatchNormBackward(bank_bn_[k], cc.bank_bn[k], dk);
      d_embedded += nn::Conv1dBackward(*bank_w_[k], *bank_b_[k], cc.bank_conv[k], dk);
    }

    for (Eigen::Index t = 0; t < t_len; ++t) {
      embedding_->grad.row(cc.tokens[static_cast<std::size_t>(t)]) += d_embedded.row(t);
    }
  }

  // Folds the batch statistics captured in `cc` into the running buffers.
  void FoldBatchNormStats(const TextEncoderCache<S> &cc) {
    for (std::size_t k = 0; k < bank_bn_.size(); ++k) {
      nn::BatchNormFoldStats(bank_bn_[k], cc.bank_bn[k], cfg_.bn_momentum);
    }
    nn::BatchNormFoldStats(proj1_bn_, cc.proj1_bn, cfg_.bn_momentum);
    nn::BatchNormFoldStats(proj2_bn_, cc.proj2_bn, cfg_.bn_momentum);
  }

 private:
  ModelConfig cfg_;
  nn::Param<S> *embedding_ = nullptr;
  std::vector<nn::Param<S> *> bank_w_, bank_b_;
  std::vector<nn::BatchNormParams<S>> bank_bn_;
  nn::Param<S> *proj1_w_ = nullptr, *proj1_b_ = nullptr;
  nn::Param<S> *proj2_w_ = nullptr, *proj2_b_ = nullptr;
  nn::BatchNormParams<S> proj1_bn_, proj2_bn_;
  std::vector<nn::Param<S> *> hw_h_w_, hw_h_b_, hw_t_w_, hw_t_b_;
  nn::LstmParams<S> fwd_, bwd_;
};

}  // namespace visualtts

#endif  // VISUALTTS_TEXT_ENCODER_H_
