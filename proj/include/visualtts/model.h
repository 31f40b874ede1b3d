// include/visualtts/model.h

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

#ifndef VISUALTTS_MODEL_H_
#define VISUALTTS_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "visualtts/checkpoint.h"
#include "visualtts/common.h"
#include "visualtts/config.h"
#include "visualtts/decoder.h"
#include "visualtts/nn.h"
#include "visualtts/speaker.h"
#include "visualtts/tensor.h"
#include "visualtts/text_encoder.h"
#include "visualtts/types.h"
#include "visualtts/tva.h"
#include "visualtts/visual_encoder.h"

namespace visualtts {

// The full synthesizer in one of its three wirings:
//
//   visualtts     textual + visual + speaker encoders, TVA context in the
//                 attention memory AND the ratio-indexed visual frame in the
//                 decoder input fusion.
//   tacotron_tva  same, minus the visual fusion: the visual stream reaches
//                 the decoder only through the TVA memory.
//   tacotron      no visual stream; the memory carries a learned projection
//                 of the textual encoding instead.
//
// All variants decode exactly 2 steps per video frame, so T_m = 4 * T_v
// holds for every output and the variants are directly comparable.
//
// Parameter registration order is fixed (text, visual, speaker, TVA or text
// projection, decoder) and is the canonical order for initialization,
// optimizer slots and checkpoints.

template <typename S>
struct ModelCache {
  TextEncoderCache<S> text;
  MatX<S> beta;
  MatX<S> alpha;       // empty in the tacotron variant
  VecX<S> spk_proj;
  int speaker_id = 0;
  int t_v = 0;

  TvaCache<S> tva;
  MatX<S> beta_proj;   // tacotron only

  MatX<S> memory_rows;
  DecoderMemory<S> memory;
  DecoderSeqCache<S> dec;
};

template <typename S>
struct SynthesisResult {
  MatX<S> mel;                       // 4 T_v x 80
  std::vector<MatX<S>> tva_weights;  // per head, T_t x T_v; empty for tacotron
  MatX<S> dec_attention;             // 2 T_v x T_t
};

template <typename S>
class Model {
 public:
  Model(const ModelConfig &cfg, ModelVariant variant, std::uint64_t seed)
      : cfg_(cfg), variant_(variant) {
    cfg_.Validate();
    text_ = std::make_unique<TextEncoder<S>>(cfg_, registry_);
    if (variant_ != ModelVariant::kTacotron) {
      visual_ = std::make_unique<VisualEncoder<S>>(cfg_, registry_);
    }
    speaker_ = std::make_unique<SpeakerEncoder<S>>(cfg_, registry_);
    if (variant_ != ModelVariant::kTacotron) {
      tva_ = std::make_unique<TvaAligner<S>>(cfg_, registry_);
    } else {
      textmem_w_ = registry_.Add("textmem.w", cfg_.tva_out_dim, cfg_.text_dim());
      textmem_b_ = registry_.Add("textmem.b", cfg_.tva_out_dim, 1);
    }
    decoder_ = std::make_unique<Decoder<S>>(cfg_, variant_, registry_);

    std::mt19937 rng = MakeRng(MixSeed(seed, 0x6d6f64656cULL));
    text_->Init(rng);
    if (visual_) visual_->Init(rng);
    speaker_->Init(rng);
    if (tva_) {
      tva_->Init(rng);
    } else {
      nn::GlorotInit(textmem_w_, rng);
    }
    decoder_->Init(rng);
  }

  const ModelConfig &config() const { return cfg_; }
  ModelVariant variant() const { return variant_; }
  nn::ParamRegistry<S> &registry() { return registry_; }
  TextEncoder<S> &text_encoder() { return *text_; }
  SpeakerEncoder<S> &speaker_encoder() { return *speaker_; }
  Decoder<S> &decoder() { return *decoder_; }
  TvaAligner<S> *tva_aligner() { return tva_.get(); }

  bool has_visual_encoder() const { return visual_ != nullptr; }

  // [T_v x visual_dim] from the frozen encoder.  The result depends only on
  // the lips and the (frozen) weights, so callers may compute it once per
  // utterance and reuse it across training steps.
  MatX<S> EncodeVisual(const LipSequence &lips) const {
    if (!visual_) {
      throw ValidationError("the tacotron variant has no visual encoder");
    }
    return visual_->Forward(lips);
  }

  // Teacher-forced pass: ground-truth frames feed the prenet, the mel pair
  // for step s covers frames 2s and 2s+1.  target_mel must satisfy the
  // length contract; alpha must be empty exactly when the variant ignores
  // the visual stream.
  MatX<S> TeacherForcedForward(const std::vector<int> &tokens, const MatX<S> &alpha,
                               int speaker_id, const MatX<S> &target_mel,
                               RunMode mode, std::mt19937 &rng,
                               ModelCache<S> *cache) {
    if (target_mel.rows() % (2 * cfg_.frames_per_step) != 0 || target_mel.rows() == 0) {
      throw DataError("target mel length " + std::to_string(target_mel.rows()) +
                      " is not a positive multiple of 4");
    }
    const int t_v = static_cast<int>(target_mel.rows()) / kMelFramesPerVideoFrame;
    ModelCache<S> local;
    ModelCache<S> &cc = cache != nullptr ? *cache : local;
    BuildConditioning(tokens, alpha, speaker_id, t_v, mode, &cc);

    const int n_steps = 2 * t_v;
    MatX<S> prev_rows = MatX<S>::Zero(n_steps, cfg_.num_mels);
    for (int s = 1; s < n_steps; ++s) {
      prev_rows.row(s) = target_mel.row(2 * s - 1);
    }
    MatX<S> fused = decoder_->FuseBatch(prev_rows, AlphaRows(cc.alpha, t_v),
                                        cc.spk_proj, mode, rng, &cc.dec.fuse);

    DecoderState<S> state = decoder_->InitState(t_v);
    cc.dec.steps.resize(static_cast<std::size_t>(n_steps));
    MatX<S> pred(4 * t_v, cfg_.num_mels);
    VecX<S> pair, align;
    for (int s = 0; s < n_steps; ++s) {
      decoder_->Step(VecX<S>(fused.row(s).transpose()), cc.memory, mode, rng,
                     &state, &cc.dec.steps[static_cast<std::size_t>(s)], &pair,
                     &align);
      pred.row(2 * s) = pair.segment(0, cfg_.num_mels).transpose();
      pred.row(2 * s + 1) = pair.segment(cfg_.num_mels, cfg_.num_mels).transpose();
    }
    return pred;
  }

  // Backward for a teacher-forced pass run with batch-statistics modes.
  // d_pred is the loss gradient with respect to the prediction.
  void Backward(const ModelCache<S> &cc, const MatX<S> &d_pred) {
    const int n_steps = 2 * cc.t_v;
    MatX<S> d_mel_rows(n_steps, 2 * cfg_.num_mels);
    for (int s = 0; s < n_steps; ++s) {
      d_mel_rows.row(s).segment(0, cfg_.num_mels) = d_pred.row(2 * s);
      d_mel_rows.row(s).segment(cfg_.num_mels, cfg_.num_mels) = d_pred.row(2 * s + 1);
    }

    MatX<S> d_fused;
    MatX<S> d_memory_rows =
        decoder_->BackwardSequence(cc.dec, cc.memory, d_mel_rows, &d_fused);
    VecX<S> d_spk = decoder_->FuseBatchBackward(cc.dec.fuse, cc.spk_proj, d_fused);

    const MatX<S> d_ctx = d_memory_rows.leftCols(cfg_.tva_out_dim);
    d_spk += d_memory_rows.rightCols(cfg_.spk_proj_dim).colwise().sum().transpose();

    MatX<S> d_beta;
    if (tva_) {
      d_beta = tva_->Backward(cc.tva, d_ctx);
    } else {
      nn::AccumulateWeightGrad(textmem_w_, d_ctx, cc.beta);
      nn::AccumulateBiasGrad(textmem_b_, d_ctx);
      d_beta = d_ctx * textmem_w_->value;
    }
    text_->Backward(cc.text, d_beta);
    speaker_->Backward(cc.speaker_id, d_spk);
  }

  // Folds the batch-norm statistics of a training forward pass into the
  // running buffers.  Called once per utterance, in batch order.
  void FoldBatchNormStats(const ModelCache<S> &cc) {
    text_->FoldBatchNormStats(cc.text);
  }

  // Autoregressive synthesis: exactly 2 T_v steps, the second frame of each
  // emitted pair feeding back as the next prenet input.  Evaluation mode
  // throughout, so repeated calls are bit-identical.
  SynthesisResult<S> Synthesize(const std::vector<int> &tokens, const MatX<S> &alpha,
                                int t_v, int speaker_id) {
    if (t_v < 1) throw ValidationError("synthesis needs at least one video frame");
    ModelCache<S> cc;
    std::mt19937 rng;  // never drawn from in eval mode
    BuildConditioning(tokens, alpha, speaker_id, t_v, RunMode::kEval, &cc);

    const int n_steps = 2 * t_v;
    SynthesisResult<S> out;
    out.mel.resize(4 * t_v, cfg_.num_mels);
    out.dec_attention.resize(n_steps, cc.memory.rows.rows());
    if (tva_) {
      out.tva_weights.resize(cc.tva.weights.size());
      for (std::size_t h = 0; h < cc.tva.weights.size(); ++h) {
        out.tva_weights[h] = cc.tva.weights[h];
      }
    }

    DecoderState<S> state = decoder_->InitState(t_v);
    VecX<S> prev = VecX<S>::Zero(cfg_.num_mels);
    VecX<S> pair, align;
    for (int s = 0; s < n_steps; ++s) {
      MatX<S> prev_row = prev.transpose();
      MatX<S> fused = decoder_->FuseBatch(prev_row, AlphaRowAt(cc.alpha, s, t_v),
                                          cc.spk_proj, RunMode::kEval, rng, nullptr);
      decoder_->Step(VecX<S>(fused.row(0).transpose()), cc.memory, RunMode::kEval,
                     rng, &state, nullptr, &pair, &align);
      out.mel.row(2 * s) = pair.segment(0, cfg_.num_mels).transpose();
      out.mel.row(2 * s + 1) = pair.segment(cfg_.num_mels, cfg_.num_mels).transpose();
      out.dec_attention.row(s) = align.transpose();
      prev = pair.segment(cfg_.num_mels, cfg_.num_mels);
    }
    return out;
  }

  // Mean absolute error over all frames and bins.
  static S L1Loss(const MatX<S> &pred, const MatX<S> &target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
      throw ValidationError("loss inputs have different shapes");
    }
    return (pred - target).cwiseAbs().sum() / static_cast<S>(pred.size());
  }

  static MatX<S> L1LossGrad(const MatX<S> &pred, const MatX<S> &target) {
    const S inv = S(1) / static_cast<S>(pred.size());
    return ((pred - target).array().sign() * inv).matrix();
  }

  void SaveCheckpoint(const std::filesystem::path &dir) const {
    std::filesystem::create_directories(dir);
    ModelMeta meta{variant_, cfg_};
    WriteModelMeta((dir / "config.json").string(), meta);
    std::vector<std::pair<std::string, std::string>> index;
    for (const auto &p : registry_.params()) {
      NdArray arr;
      arr.dims = p->file_dims;
      arr.data.resize(static_cast<std::size_t>(p->value.size()));
      for (Eigen::Index i = 0; i < p->value.size(); ++i) {
        arr.data[static_cast<std::size_t>(i)] = static_cast<float>(p->value.data()[i]);
      }
      const std::string file = p->name + ".tensor";
      WriteTensor(arr, dir / file);
      index.emplace_back(p->name, file);
    }
    WriteParamIndex((dir / "index.txt").string(), index);
  }

  // Loads values into this model.  The index must cover exactly the
  // registered parameters and every tensor must match its registered shape.
  void LoadCheckpoint(const std::filesystem::path &dir) {
    const auto index = ReadParamIndex((dir / "index.txt").string());
    std::size_t matched = 0;
    for (const auto &[name, file] : index) {
      nn::Param<S> *p = registry_.Find(name);
      if (p == nullptr) {
        throw FormatError("checkpoint lists unknown parameter " + name);
      }
      const NdArray arr = ReadTensor(dir / file);
      if (arr.dims != p->file_dims) {
        throw FormatError("checkpoint tensor " + name + " has the wrong shape");
      }
      for (Eigen::Index i = 0; i < p->value.size(); ++i) {
        p->value.data()[i] = static_cast<S>(arr.data[static_cast<std::size_t>(i)]);
      }
      ++matched;
    }
    if (matched != registry_.params().size()) {
      throw FormatError("checkpoint covers " + std::to_string(matched) +
                        " parameters, model has " +
                        std::to_string(registry_.params().size()));
    }
  }

  static std::unique_ptr<Model<S>> LoadFrom(const std::filesystem::path &dir) {
    const ModelMeta meta = ReadModelMeta((dir / "config.json").string());
    auto model = std::make_unique<Model<S>>(meta.config, meta.variant, 0);
    model->LoadCheckpoint(dir);
    return model;
  }

 private:
  // Everything up to the decoder loop: encodings, speaker projection,
  // attention memory.
  void BuildConditioning(const std::vector<int> &tokens, const MatX<S> &alpha,
                         int speaker_id, int t_v, RunMode mode, ModelCache<S> *cc) {
    if (variant_ == ModelVariant::kTacotron) {
      if (alpha.size() != 0) {
        throw ValidationError(
            "the tacotron variant takes no visual embedding; pass an empty matrix");
      }
    } else {
      if (alpha.rows() != t_v || alpha.cols() != cfg_.visual_dim) {
        throw ValidationError("visual embedding must be [T_v x visual_dim]");
      }
    }
    cc->alpha = alpha;
    cc->speaker_id = speaker_id;
    cc->t_v = t_v;

    cc->beta = text_->Forward(tokens, UsesBatchStats(mode), &cc->text);
    cc->spk_proj = speaker_->Project(speaker_id);

    MatX<S> ctx;
    if (tva_) {
      TvaOutput<S> tva_out = tva_->Forward(cc->beta, cc->alpha, &cc->tva);
      ctx = std::move(tva_out.context);
    } else {
      cc->beta_proj = cc->beta * textmem_w_->value.transpose();
      cc->beta_proj.rowwise() += textmem_b_->value.col(0).transpose();
      ctx = cc->beta_proj;
    }

    cc->memory_rows.resize(ctx.rows(), cfg_.memory_dim());
    cc->memory_rows.leftCols(cfg_.tva_out_dim) = ctx;
    cc->memory_rows.rightCols(cfg_.spk_proj_dim).rowwise() =
        cc->spk_proj.transpose();
    cc->memory = decoder_->PrepareMemory(cc->memory_rows);
  }

  // Ratio-indexed visual rows for all steps of a teacher-forced pass; empty
  // whenever the variant has no visual fusion.
  MatX<S> AlphaRows(const MatX<S> &alpha, int t_v) const {
    if (variant_ != ModelVariant::kVisualTts) return MatX<S>();
    MatX<S> rows(2 * t_v, cfg_.visual_dim);
    for (int s = 0; s < 2 * t_v; ++s) {
      rows.row(s) = alpha.row(VideoIndex(2 * s, t_v));
    }
    return rows;
  }

  MatX<S> AlphaRowAt(const MatX<S> &alpha, int s, int t_v) const {
    if (variant_ != ModelVariant::kVisualTts) return MatX<S>();
    MatX<S> row(1, cfg_.visual_dim);
    row.row(0) = alpha.row(VideoIndex(2 * s, t_v));
    return row;
  }

  ModelConfig cfg_;
  ModelVariant variant_;
  nn::ParamRegistry<S> registry_;
  std::unique_ptr<TextEncoder<S>> text_;
  std::unique_ptr<VisualEncoder<S>> visual_;
  std::unique_ptr<SpeakerEncoder<S>> speaker_;
  std::unique_ptr<TvaAligner<S>> tva_;
  nn::Param<S> *textmem_w_ = nullptr, *textmem_b_ = nullptr;
  std::unique_ptr<Decoder<S>> decoder_;
};

}  // namespace visualtts

#endif  // VISUALTTS_MODEL_H_
