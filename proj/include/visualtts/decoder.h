// include/visualtts/decoder.h

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

#ifndef VISUALTTS_DECODER_H_
#define VISUALTTS_DECODER_H_

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "visualtts/config.h"
#include "visualtts/nn.h"

namespace visualtts {

// Autoregressive mel decoder.  One step consumes a fused conditioning vector
// and the attention memory and emits two mel frames:
//
//   x      = [fused ; previous attention context]
//   h_att  = GRU(x)                                (attention RNN)
//   a      = softmax(v . tanh(U m_i + b + W h_att))  over memory rows m_i
//   ctx    = sum_i a_i m_i
//   h1     = LSTM1([h_att ; ctx])   with zoneout
//   h2     = LSTM2(h1)              with zoneout
//   pair   = W_o [h2 ; ctx] + b_o                  (2 x 80 values)
//
// The fused vector comes from FuseBatch: prenet on the previous mel frame,
// optional concatenation with the ratio-indexed visual embedding frame
// (visual fusion, present only in the full variant), a linear map to
// fusion_dim, plus an additive learned map of the projected speaker vector.
//
// Decoding always runs exactly 2 * T_v steps; DecoderState tracks the limit
// and Step throws once it would be exceeded.  That stop rule, not a stop
// token, is what locks T_m to 4 * T_v.

// video frame that conditions mel frame t; clamped at the last frame.
inline int VideoIndex(int mel_frame_t, int num_video_frames) {
  if (mel_frame_t < 0) throw ValidationError("negative mel frame index");
  if (num_video_frames < 1) throw ValidationError("empty video");
  const int idx = mel_frame_t / kMelFramesPerVideoFrame;
  return idx < num_video_frames ? idx : num_video_frames - 1;
}

template <typename S>
struct DecoderMemory {
  MatX<S> rows;  // T_t x memory_dim
  MatX<S> keys;  // T_t x dec_attn_dim, U m_i + b precomputed per utterance
};

template <typename S>
struct DecoderState {
  VecX<S> h_att, h1, c1, h2, c2, context;
  int step_index = 0;
  int total_steps = 0;
};

template <typename S>
struct FuseCache {
  MatX<S> prev_rows;          // n x 80
  MatX<S> p1_relu, p1_mask;   // prenet layer 1: post-relu, dropout mask
  MatX<S> p1_out;             // after dropout
  MatX<S> p2_relu, p2_mask;
  MatX<S> p2_out;
  MatX<S> fusion_in;          // n x (p2 [+ visual_dim])
  Eigen::Index n = 0;
};

template <typename S>
struct StepCache {
  VecX<S> fused;
  nn::GruStepCache<S> gru;
  MatX<S> attn_tanh;          // T_t x dec_attn_dim, post-tanh
  VecX<S> attn_weights;       // T_t
  VecX<S> context;
  VecX<S> h_att;
  nn::LstmStepCache<S> lstm1, lstm2;
  VecX<S> head_in;
};

template <typename S>
struct DecoderSeqCache {
  FuseCache<S> fuse;
  std::vector<StepCache<S>> steps;
};


template <typename S>
class Decoder {
 public:
  Decoder(const ModelConfig &cfg, ModelVariant variant, nn::ParamRegistry<S> &reg)
      : cfg_(cfg), variant_(variant) {
    const int mem = cfg.memory_dim();
    fusion_in_dim_ = cfg.prenet_dim2 +
                     (variant == ModelVariant::kVisualTts ? cfg.visual_dim : 0);

    pre_w1_ = reg.Add("dec.prenet.w1", cfg.prenet_dim1, cfg.num_mels);
    pre_b1_ = reg.Add("dec.prenet.b1", cfg.prenet_dim1, 1);
    pre_w2_ = reg.Add("dec.prenet.w2", cfg.prenet_dim2, cfg.prenet_dim1);
    pre_b2_ = reg.Add("dec.prenet.b2", cfg.prenet_dim2, 1);
    fuse_w_ = reg.Add("dec.fusion.w", cfg.fusion_dim, fusion_in_dim_);
    fuse_b_ = reg.Add("dec.fusion.b", cfg.fusion_dim, 1);
    spk_w_ = reg.Add("dec.spkmap.w", cfg.fusion_dim, cfg.spk_proj_dim);
    spk_b_ = reg.Add("dec.spkmap.b", cfg.fusion_dim, 1);

    gru_ = nn::AddGru(reg, "dec.attn_rnn", cfg.fusion_dim + mem, cfg.attn_rnn_dim);

    attn_wq_ = reg.Add("dec.attn.wq", cfg.dec_attn_dim, cfg.attn_rnn_dim);
    attn_uk_ = reg.Add("dec.attn.uk", cfg.dec_attn_dim, mem);
    attn_bk_ = reg.Add("dec.attn.bk", cfg.dec_attn_dim, 1);
    attn_v_ = reg.Add("dec.attn.v", cfg.dec_attn_dim, 1);

    lstm1_ = nn::AddLstm(reg, "dec.lstm1", cfg.attn_rnn_dim + mem, cfg.dec_lstm_dim);
    lstm2_ = nn::AddLstm(reg, "dec.lstm2", cfg.dec_lstm_dim, cfg.dec_lstm_dim);

    head_w_ = reg.Add("dec.head.w", 2 * cfg.num_mels, cfg.dec_lstm_dim + mem);
    head_b_ = reg.Add("dec.head.b", 2 * cfg.num_mels, 1);
  }

  void Init(std::mt19937 &rng) {
    for (auto *p : {pre_w1_, pre_w2_, fuse_w_, spk_w_, attn_wq_, attn_uk_,
                    gru_.w, gru_.u, lstm1_.w, lstm1_.u, lstm2_.w, lstm2_.u,
                    head_w_}) {
      nn::GlorotInit(p, rng);
    }
    nn::NormalInit(attn_v_, 1.0 / std::sqrt(static_cast<double>(cfg_.dec_attn_dim)),
                   rng);
    lstm1_.b->value.col(0).segment(cfg_.dec_lstm_dim, cfg_.dec_lstm_dim).setOnes();
    lstm2_.b->value.col(0).segment(cfg_.dec_lstm_dim, cfg_.dec_lstm_dim).setOnes();
    // Slightly positive prenet biases keep the relu units live on the
    // all-zero go frame; with zero biases the first step's prenet output is
    // identically zero and every unit starts on the relu corner.
    pre_b1_->value.setConstant(S(0.1));
    pre_b2_->value.setConstant(S(0.1));
  }

  int fusion_in_dim() const { return fusion_in_dim_; }

  DecoderMemory<S> PrepareMemory(const MatX<S> &rows) const {
    if (rows.rows() == 0) throw ValidationError("empty attention memory");
    if (rows.cols() != cfg_.memory_dim()) {
      throw ValidationError("memory width " + std::to_string(rows.cols()) +
                            " does not match model memory dim " +
                            std::to_string(cfg_.memory_dim()));
    }
    DecoderMemory<S> mem;
    mem.rows = rows;
    mem.keys.noalias() = rows * attn_uk_->value.transpose();
    mem.keys.rowwise() += attn_bk_->value.col(0).transpose();
    return mem;
  }

  DecoderState<S> InitState(int num_video_frames) const {
    if (num_video_frames < 1) throw ValidationError("empty video");
    DecoderState<S> st;
    st.h_att = VecX<S>::Zero(cfg_.attn_rnn_dim);
    st.h1 = VecX<S>::Zero(cfg_.dec_lstm_dim);
    st.c1 = VecX<S>::Zero(cfg_.dec_lstm_dim);
    st.h2 = VecX<S>::Zero(cfg_.dec_lstm_dim);
    st.c2 = VecX<S>::Zero(cfg_.dec_lstm_dim);
    st.context = VecX<S>::Zero(cfg_.memory_dim());
    st.step_index = 0;
    st.total_steps = 2 * num_video_frames;
    return st;
  }

  // Prenet, optional visual concatenation, fusion projection and additive
  // speaker conditioning for n decoder steps at once.  alpha_rows must be
  // n rows of ratio-indexed visual embedding for the full variant and is
  // ignored (may be empty) otherwise.
  MatX<S> FuseBatch(const MatX<S> &prev_rows, const MatX<S> &alpha_rows,
                    const VecX<S> &spk_proj, RunMode mode, std::mt19937 &rng,
                    FuseCache<S> *cache) const {
    const Eigen::Index n = prev_rows.rows();
    if (prev_rows.cols() != cfg_.num_mels) {
      throw ValidationError("previous-frame input must have 80 bands");
    }
    if (spk_proj.size() != cfg_.spk_proj_dim) {
      throw ValidationError("projected speaker vector has the wrong size");
    }
    FuseCache<S> local;
    FuseCache<S> &cc = cache != nullptr ? *cache : local;
    cc.n = n;
    cc.prev_rows = prev_rows;

    MatX<S> h1 = prev_rows * pre_w1_->value.transpose();
    h1.rowwise() += pre_b1_->value.col(0).transpose();
    cc.p1_relu = nn::Relu(h1);
    cc.p1_mask = SamplesNoise(mode)
                     ? nn::DropoutMask<S>(n, cfg_.prenet_dim1, cfg_.prenet_dropout, rng)
                     : MatX<S>::Constant(n, cfg_.prenet_dim1, S(1));
    cc.p1_out = cc.p1_relu.cwiseProduct(cc.p1_mask);

    MatX<S> h2 = cc.p1_out * pre_w2_->value.transpose();
    h2.rowwise() += pre_b2_->value.col(0).transpose();
    cc.p2_relu = nn::Relu(h2);
    cc.p2_mask = SamplesNoise(mode)
                     ? nn::DropoutMask<S>(n, cfg_.prenet_dim2, cfg_.prenet_dropout, rng)
                     : MatX<S>::Constant(n, cfg_.prenet_dim2, S(1));
    cc.p2_out = cc.p2_relu.cwiseProduct(cc.p2_mask);

    if (variant_ == ModelVariant::kVisualTts) {
      if (alpha_rows.rows() != n || alpha_rows.cols() != cfg_.visual_dim) {
        throw ValidationError("visual fusion rows do not match step count");
      }
      cc.fusion_in.resize(n, fusion_in_dim_);
      cc.fusion_in.leftCols(cfg_.prenet_dim2) = cc.p2_out;
      cc.fusion_in.rightCols(cfg_.visual_dim) = alpha_rows;
    } else {
      cc.fusion_in = cc.p2_out;
    }

    MatX<S> fused = cc.fusion_in * fuse_w_->value.transpose();
    fused.rowwise() += fuse_b_->value.col(0).transpose();
    const VecX<S> spk_add = spk_w_->value * spk_proj + spk_b_->value.col(0);
    fused.rowwise() += spk_add.transpose();
    return fused;
  }

  // Backward through FuseBatch.  Returns the gradient for spk_proj;
  // gradients for prev_rows and alpha_rows are dropped (ground-truth frames
  // and a frozen visual encoder).
  VecX<S> FuseBatchBackward(const FuseCache<S> &cc, const VecX<S> &spk_proj,
                            const MatX<S> &d_fused) {
    nn::AccumulateWeightGrad(fuse_w_, d_fused, cc.fusion_in);
    nn::AccumulateBiasGrad(fuse_b_, d_fused);
    const VecX<S> d_spk_add = d_fused.colwise().sum().transpose();
    spk_w_->grad.noalias() += d_spk_add * spk_proj.transpose();
    spk_b_->grad.col(0) += d_spk_add;

    const MatX<S> d_fin = d_fused * fuse_w_->value;
    MatX<S> d_p2 = d_fin.leftCols(cfg_.prenet_dim2)
                       .cwiseProduct(cc.p2_mask)
                       .cwiseProduct(
                           (cc.p2_relu.array() > S(0)).template cast<S>().matrix());
    nn::AccumulateWeightGrad(pre_w2_, d_p2, cc.p1_out);
    nn::AccumulateBiasGrad(pre_b2_, d_p2);

    MatX<S> d_p1 = (d_p2 * pre_w2_->value)
                       .cwiseProduct(cc.p1_mask)
                       .cwiseProduct(
                           (cc.p1_relu.array() > S(0)).template cast<S>().matrix());
    nn::AccumulateWeightGrad(pre_w1_, d_p1, cc.prev_rows);
    nn::AccumulateBiasGrad(pre_b1_, d_p1);

    return spk_w_->value.transpose() * d_spk_add;
  }

  // One decoder step.  Emits the 2x80 pair (flattened, first frame then
  // second) and the alignment row over memory entries.
  void Step(const VecX<S> &fused, const DecoderMemory<S> &mem, RunMode mode,
            std::mt19937 &rng, DecoderState<S> *state, StepCache<S> *cache,
            VecX<S> *mel_pair, VecX<S> *alignment) const {
    if (state->step_index >= state->total_steps) {
      throw ValidationError("decoder stop contract violated: step " +
                            std::to_string(state->step_index) +
                            " beyond limit " + std::to_string(state->total_steps));
    }
    StepCache<S> local;
    StepCache<S> &cc = cache != nullptr ? *cache : local;
    cc.fused = fused;

    VecX<S> x(cfg_.fusion_dim + cfg_.memory_dim());
    x.segment(0, cfg_.fusion_dim) = fused;
    x.segment(cfg_.fusion_dim, cfg_.memory_dim()) = state->context;
    nn::GruForwardStep(gru_, x, state->h_att, &state->h_att, &cc.gru);
    cc.h_att = state->h_att;

    const VecX<S> query = attn_wq_->value * state->h_att;
    cc.attn_tanh = (mem.keys.rowwise() + query.transpose()).array().tanh().matrix();
    const VecX<S> scores = cc.attn_tanh * attn_v_->value.col(0);
    cc.attn_weights = nn::SoftmaxVec(scores);
    cc.context.noalias() = mem.rows.transpose() * cc.attn_weights;
    state->context = cc.context;

    const VecX<S> mh1 = ZoneoutMask(mode, rng);
    const VecX<S> mc1 = ZoneoutMask(mode, rng);
    VecX<S> x1(cfg_.attn_rnn_dim + cfg_.memory_dim());
    x1.segment(0, cfg_.attn_rnn_dim) = state->h_att;
    x1.segment(cfg_.attn_rnn_dim, cfg_.memory_dim()) = cc.context;
    nn::LstmForwardStep(lstm1_, x1, state->h1, state->c1, mh1, mc1, &state->h1,
                        &state->c1, &cc.lstm1);

    const VecX<S> mh2 = ZoneoutMask(mode, rng);
    const VecX<S> mc2 = ZoneoutMask(mode, rng);
    nn::LstmForwardStep(lstm2_, state->h1, state->h2, state->c2, mh2, mc2,
                        &state->h2, &state->c2, &cc.lstm2);

    cc.head_in.resize(cfg_.dec_lstm_dim + cfg_.memory_dim());
    cc.head_in.segment(0, cfg_.dec_lstm_dim) = state->h2;
    cc.head_in.segment(cfg_.dec_lstm_dim, cfg_.memory_dim()) = cc.context;
    *mel_pair = head_w_->value * cc.head_in + head_b_->value.col(0);
    CheckFiniteNumeric(*mel_pair,
                       "decoder output at step " + std::to_string(state->step_index));
    *alignment = cc.attn_weights;
    ++state->step_index;
  }

  // Backward through a full teacher-forced sequence of steps.  d_mel_rows
  // has one row per step (2 * 80 values, the flattened pair).  Returns the
  // gradient of the memory rows; the gradient of the fused inputs goes out
  // through *d_fused_rows for FuseBatchBackward.
  MatX<S> BackwardSequence(const DecoderSeqCache<S> &cc,
                           const DecoderMemory<S> &mem,
                           const MatX<S> &d_mel_rows, MatX<S> *d_fused_rows) {
    const Eigen::Index n = d_mel_rows.rows();
    const int mem_dim = cfg_.memory_dim();
    const Eigen::Index t_t = mem.rows.rows();

    MatX<S> head_in_rows(n, cfg_.dec_lstm_dim + mem_dim);
    MatX<S> lstm2_dpre(n, 4 * cfg_.dec_lstm_dim), lstm2_x(n, cfg_.dec_lstm_dim),
        lstm2_hprev(n, cfg_.dec_lstm_dim);
    MatX<S> lstm1_dpre(n, 4 * cfg_.dec_lstm_dim),
        lstm1_x(n, cfg_.attn_rnn_dim + mem_dim), lstm1_hprev(n, cfg_.dec_lstm_dim);
    MatX<S> gru_dpre_w(n, 3 * cfg_.attn_rnn_dim), gru_dpre_u(n, 3 * cfg_.attn_rnn_dim),
        gru_x(n, cfg_.fusion_dim + mem_dim), gru_hprev(n, cfg_.attn_rnn_dim);
    MatX<S> attn_dq_rows(n, cfg_.dec_attn_dim), attn_hatt_rows(n, cfg_.attn_rnn_dim);
    MatX<S> d_keys = MatX<S>::Zero(t_t, cfg_.dec_attn_dim);

    MatX<S> d_memory_rows = MatX<S>::Zero(t_t, mem_dim);
    d_fused_rows->resize(n, cfg_.fusion_dim);

    VecX<S> dh_att_carry = VecX<S>::Zero(cfg_.attn_rnn_dim);
    VecX<S> dh1_carry = VecX<S>::Zero(cfg_.dec_lstm_dim),
            dc1_carry = VecX<S>::Zero(cfg_.dec_lstm_dim);
    VecX<S> dh2_carry = VecX<S>::Zero(cfg_.dec_lstm_dim),
            dc2_carry = VecX<S>::Zero(cfg_.dec_lstm_dim);
    VecX<S> dctx_carry = VecX<S>::Zero(mem_dim);

    for (Eigen::Index s = n - 1; s >= 0; --s) {
      const StepCache<S> &sc = cc.steps[static_cast<std::size_t>(s)];

      // Output head.
      const VecX<S> d_pair = d_mel_rows.row(s).transpose();
      head_in_rows.row(s) = sc.head_in.transpose();
      const VecX<S> d_head_in = head_w_->value.transpose() * d_pair;
      VecX<S> dctx = d_head_in.segment(cfg_.dec_lstm_dim, mem_dim) + dctx_carry;

      // LSTM stack.
      VecX<S> dh2 = d_head_in.segment(0, cfg_.dec_lstm_dim) + dh2_carry;
      VecX<S> dx2, dpre;
      nn::LstmBackwardStep(lstm2_, sc.lstm2, dh2, dc2_carry, &dx2, &dh2_carry,
                           &dc2_carry, &dpre);
      lstm2_dpre.row(s) = dpre.transpose();
      lstm2_x.row(s) = sc.lstm2.x.transpose();
      lstm2_hprev.row(s) = sc.lstm2.h_prev.transpose();

      VecX<S> dh1 = dx2 + dh1_carry;
      VecX<S> dx1;
      nn::LstmBackwardStep(lstm1_, sc.lstm1, dh1, dc1_carry, &dx1, &dh1_carry,
                           &dc1_carry, &dpre);
      lstm1_dpre.row(s) = dpre.transpose();
      lstm1_x.row(s) = sc.lstm1.x.transpose();
      lstm1_hprev.row(s) = sc.lstm1.h_prev.transpose();

      VecX<S> dh_att = dx1.segment(0, cfg_.attn_rnn_dim);
      dctx += dx1.segment(cfg_.attn_rnn_dim, mem_dim);

      // Attention: ctx = rows^T a.
      const VecX<S> da = mem.rows * dctx;
      d_memory_rows.noalias() += sc.attn_weights * dctx.transpose();
      const VecX<S> de = nn::SoftmaxVecBackward(sc.attn_weights, da);
      // scores_i = tanh(key_i + q) . v
      const MatX<S> d_tanh = de * attn_v_->value.col(0).transpose();
      attn_v_->grad.col(0) += sc.attn_tanh.transpose() * de;
      const MatX<S> d_pre_tanh =
          d_tanh.cwiseProduct((S(1) - sc.attn_tanh.array().square()).matrix());
      d_keys += d_pre_tanh;
      const VecX<S> dq = d_pre_tanh.colwise().sum().transpose();
      attn_dq_rows.row(s) = dq.transpose();
      attn_hatt_rows.row(s) = sc.h_att.transpose();
      dh_att += attn_wq_->value.transpose() * dq;

      // Attention RNN.
      dh_att += dh_att_carry;
      VecX<S> dx_gru, dpre_w, dpre_u;
      nn::GruBackwardStep(gru_, sc.gru, dh_att, &dx_gru, &dh_att_carry, &dpre_w,
                          &dpre_u);
      gru_dpre_w.row(s) = dpre_w.transpose();
      gru_dpre_u.row(s) = dpre_u.transpose();
      gru_x.row(s) = sc.gru.x.transpose();
      gru_hprev.row(s) = sc.gru.h_prev.transpose();
      d_fused_rows->row(s) = dx_gru.segment(0, cfg_.fusion_dim).transpose();
      dctx_carry = dx_gru.segment(cfg_.fusion_dim, mem_dim);
    }

    nn::AccumulateWeightGrad(head_w_, d_mel_rows, head_in_rows);
    nn::AccumulateBiasGrad(head_b_, d_mel_rows);
    nn::AccumulateWeightGrad(lstm2_.w, lstm2_dpre, lstm2_x);
    nn::AccumulateWeightGrad(lstm2_.u, lstm2_dpre, lstm2_hprev);
    nn::AccumulateBiasGrad(lstm2_.b, lstm2_dpre);
    nn::AccumulateWeightGrad(lstm1_.w, lstm1_dpre, lstm1_x);
    nn::AccumulateWeightGrad(lstm1_.u, lstm1_dpre, lstm1_hprev);
    nn::AccumulateBiasGrad(lstm1_.b, lstm1_dpre);
    nn::AccumulateWeightGrad(gru_.w, gru_dpre_w, gru_x);
    nn::AccumulateWeightGrad(gru_.u, gru_dpre_u, gru_hprev);
    nn::AccumulateBiasGrad(gru_.b, gru_dpre_w);
    nn::AccumulateWeightGrad(attn_wq_, attn_dq_rows, attn_hatt_rows);

    // keys = rows U^T + b.
    nn::AccumulateWeightGrad(attn_uk_, d_keys, mem.rows);
    nn::AccumulateBiasGrad(attn_bk_, d_keys);
    d_memory_rows.noalias() += d_keys * attn_uk_->value;
    return d_memory_rows;
  }

 private:
  VecX<S> ZoneoutMask(RunMode mode, std::mt19937 &rng) const {
    const Eigen::Index h = cfg_.dec_lstm_dim;
    if (!SamplesNoise(mode)) {
      return VecX<S>::Constant(h, static_cast<S>(cfg_.zoneout_rate));
    }
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    VecX<S> mask(h);
    for (Eigen::Index i = 0; i < h; ++i) {
      mask(i) = dist(rng) < cfg_.zoneout_rate ? S(1) : S(0);
    }
    return mask;
  }

  ModelConfig cfg_;
  ModelVariant variant_;
  int fusion_in_dim_ = 0;

  nn::Param<S> *pre_w1_ = nullptr, *pre_b1_ = nullptr;
  nn::Param<S> *pre_w2_ = nullptr, *pre_b2_ = nullptr;
  nn::Param<S> *fuse_w_ = nullptr, *fuse_b_ = nullptr;
  nn::Param<S> *spk_w_ = nullptr, *spk_b_ = nullptr;
  nn::GruParams<S> gru_;
  nn::Param<S> *attn_wq_ = nullptr, *attn_uk_ = nullptr, *attn_bk_ = nullptr,
               *attn_v_ = nullptr;
  nn::LstmParams<S> lstm1_, lstm2_;
  nn::Param<S> *head_w_ = nullptr, *head_b_ = nullptr;
};

}  // namespace visualtts

#endif  // VISUALTTS_DECODER_H_
