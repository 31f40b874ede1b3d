// include/visualtts/speaker.h

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

#ifndef VISUALTTS_SPEAKER_H_
#define VISUALTTS_SPEAKER_H_

#include <string>
#include <vector>

#include "visualtts/config.h"
#include "visualtts/nn.h"

namespace visualtts {

// Speaker lookup table with a linear projection.  Each speaker id maps to a
// spk_dim vector; the projection brings it down to spk_proj_dim for decoder
// conditioning.  Rows are trainable by default; ImportVector overwrites a
// row with an externally computed embedding and pins it, so pinned rows
// receive no gradient while the projection still trains.
template <typename S>
class SpeakerEncoder {
 public:
  SpeakerEncoder(const ModelConfig &cfg, nn::ParamRegistry<S> &reg) : cfg_(cfg) {
    table_ = reg.Add("speaker.table", cfg.num_speakers, cfg.spk_dim);
    proj_w_ = reg.Add("speaker.proj.w", cfg.spk_proj_dim, cfg.spk_dim);
    proj_b_ = reg.Add("speaker.proj.b", cfg.spk_proj_dim, 1);
    imported_ = reg.Add("speaker.imported", cfg.num_speakers, 1, /*frozen=*/true);
  }

  void Init(std::mt19937 &rng) {
    nn::NormalInit(table_, 0.3, rng);
    nn::GlorotInit(proj_w_, rng);
  }

  void CheckId(int speaker_id) const {
    if (speaker_id < 0 || speaker_id >= cfg_.num_speakers) {
      throw ValidationError("speaker id " + std::to_string(speaker_id) +
                            " outside table of size " +
                            std::to_string(cfg_.num_speakers));
    }
  }

  VecX<S> Lookup(int speaker_id) const {
    CheckId(speaker_id);
    return table_->value.row(speaker_id).transpose();
  }

  // gamma.projected = W * gamma + b
  VecX<S> Project(int speaker_id) const {
    return proj_w_->value * Lookup(speaker_id) + proj_b_->value.col(0);
  }

  void ImportVector(int speaker_id, const VecX<S> &vec) {
    CheckId(speaker_id);
    if (vec.size() != cfg_.spk_dim) {
      throw ValidationError("imported speaker vector has size " +
                            std::to_string(vec.size()) + ", expected " +
                            std::to_string(cfg_.spk_dim));
    }
    CheckFinite(vec, "imported speaker vector");
    table_->value.row(speaker_id) = vec.transpose();
    imported_->value(speaker_id, 0) = S(1);
  }

  bool IsImported(int speaker_id) const {
    CheckId(speaker_id);
    return imported_->value(speaker_id, 0) != S(0);
  }

  // d_projected flows into the projection always and into the table row only
  // when the row was learned rather than imported.
  void Backward(int speaker_id, const VecX<S> &d_projected) {
    CheckId(speaker_id);
    const VecX<S> gamma = Lookup(speaker_id);
    proj_w_->grad.noalias() += d_projected * gamma.transpose();
    proj_b_->grad.col(0) += d_projected;
    if (!IsImported(speaker_id)) {
      table_->grad.row(speaker_id) +=
          (proj_w_->value.transpose() * d_projected).transpose();
    }
  }

 private:
  ModelConfig cfg_;
  nn::Param<S> *table_ = nullptr;
  nn::Param<S> *proj_w_ = nullptr, *proj_b_ = nullptr;
  nn::Param<S> *imported_ = nullptr;  // 0/1 flags, persisted with checkpoints
};

}  // namespace visualtts

#endif  // VISUALTTS_SPEAKER_H_
