// include/visualtts/config.h

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

#ifndef VISUALTTS_CONFIG_H_
#define VISUALTTS_CONFIG_H_

#include <cstdint>
#include <string>

#include "visualtts/common.h"
#include "visualtts/tokenizer.h"
#include "visualtts/types.h"

namespace visualtts {

// Which conditioning streams feed the decoder.
//  kVisualTts:   visual attention context in the decoder input fusion AND in
//                the attention memory.
//  kTacotronTva: visual attention context in the memory only; the input
//                fusion sees just the prenet output.
//  kTacotron:    no visual stream at all; the memory carries a projection of
//                the textual encoding instead of the visual attention output.
// All three decode exactly 2 video-frames worth of mel per step and stop at
// the video length, so their outputs are directly comparable.
enum class ModelVariant { kVisualTts, kTacotronTva, kTacotron };

// How stochastic layers behave during a forward pass.
//  kTrain:     batch-statistics batch norm, sampled dropout and zoneout.
//  kGradCheck: batch-statistics batch norm (so the backward math matches),
//              dropout off, zoneout replaced by its expectation.  This makes
//              the forward pass a deterministic differentiable function, which
//              finite differences require.
//  kEval:      running-buffer batch norm, dropout off, zoneout expectation.
enum class RunMode { kTrain, kGradCheck, kEval };

inline bool UsesBatchStats(RunMode m) { return m != RunMode::kEval; }
inline bool SamplesNoise(RunMode m) { return m == RunMode::kTrain; }

inline std::string ToString(ModelVariant v) {
  switch (v) {
    case ModelVariant::kVisualTts: return "visualtts";
    case ModelVariant::kTacotronTva: return "tacotron_tva";
    case ModelVariant::kTacotron: return "tacotron";
  }
  throw ValidationError("unknown model variant");
}

inline ModelVariant ParseModelVariant(const std::string &s) {
  if (s == "visualtts") return ModelVariant::kVisualTts;
  if (s == "tacotron_tva") return ModelVariant::kTacotronTva;
  if (s == "tacotron") return ModelVariant::kTacotron;
  throw ValidationError("unknown model variant \"" + s +
                        "\", expected visualtts, tacotron_tva or tacotron");
}

// Every width in the network.  The defaults are the full-size model; Scaled()
// shrinks the hidden dimensions for desk-scale training while keeping the
// interface dimensions (mel bands, vocabulary, attention head count) intact.
struct ModelConfig {
  int vocab_size = kVocabSize;
  int num_speakers = 33;

  // Textual encoder.
  int char_emb_dim = 128;
  int conv_bank_size = 16;   // kernel widths 1..16
  int conv_bank_channels = 128;
  int conv_proj_dim = 128;   // two projection convs, widths 3
  int num_highway_layers = 4;
  int enc_lstm_dim = 256;    // per direction; textual dim is twice this

  // Visual encoder.
  int stem_channels = 64;
  int resnet_channels[4] = {64, 128, 256, 512};
  int visual_dim = 512;

  // Speaker embedding.
  int spk_dim = 256;
  int spk_proj_dim = 64;

  // Text-visual attention.
  int tva_heads = 2;
  int tva_head_dim = 256;
  int tva_out_dim = 64;

  // Acoustic decoder.
  int prenet_dim1 = 256;
  int prenet_dim2 = 128;
  int fusion_dim = 256;
  int attn_rnn_dim = 256;
  int dec_lstm_dim = 256;
  int dec_attn_dim = 128;
  int num_mels = kNumMels;
  int frames_per_step = 2;

  double zoneout_rate = 0.1;
  double prenet_dropout = 0.5;
  double bn_momentum = 0.1;

  int text_dim() const { return 2 * enc_lstm_dim; }
  int memory_dim() const { return tva_out_dim + spk_proj_dim; }

  // Desk-scale widths: hidden sizes divided by 8, interface sizes kept.
  static ModelConfig Scaled() {
    ModelConfig c;
    c.char_emb_dim = 16;
    c.conv_bank_channels = 16;
    c.conv_proj_dim = 16;
    c.enc_lstm_dim = 32;
    c.stem_channels = 8;
    c.resnet_channels[0] = 8;
    c.resnet_channels[1] = 16;
    c.resnet_channels[2] = 32;
    c.resnet_channels[3] = 64;
    c.visual_dim = 64;
    c.spk_dim = 32;
    c.spk_proj_dim = 8;
    c.tva_head_dim = 32;
    c.tva_out_dim = 8;
    c.prenet_dim1 = 32;
    c.prenet_dim2 = 16;
    c.fusion_dim = 32;
    c.attn_rnn_dim = 32;
    c.dec_lstm_dim = 32;
    c.dec_attn_dim = 16;
    return c;
  }

  void Validate() const {
    if (vocab_size < 2) throw ValidationError("vocab_size too small");
    if (num_speakers < 1) throw ValidationError("num_speakers must be positive");
    if (num_mels != kNumMels) {
      throw ValidationError("num_mels must be " + std::to_string(kNumMels));
    }
    if (frames_per_step != 2) {
      throw ValidationError("frames_per_step must be 2 so each decoder step "
                            "covers half a video frame");
    }
    if (tva_heads < 1) throw ValidationError("tva_heads must be positive");
    if (zoneout_rate < 0.0 || zoneout_rate >= 1.0) {
      throw ValidationError("zoneout_rate must be in [0, 1)");
    }
    if (prenet_dropout < 0.0 || prenet_dropout >= 1.0) {
      throw ValidationError("prenet_dropout must be in [0, 1)");
    }
  }
};

struct TrainConfig {
  ModelVariant model_variant = ModelVariant::kVisualTts;
  double learning_rate = 1e-3;
  int batch_size = 8;
  int max_steps = 500;
  std::uint64_t seed = 0;
  bool toy_scale = false;
  int checkpoint_every = 0;  // 0: only the final checkpoint
  double grad_clip_norm = 1.0;

  void Validate() const {
    if (learning_rate <= 0.0) throw ValidationError("learning_rate must be positive");
    if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
    if (max_steps < 1) throw ValidationError("max_steps must be at least 1");
    if (checkpoint_every < 0) throw ValidationError("checkpoint_every must be >= 0");
    if (grad_clip_norm < 0.0) throw ValidationError("grad_clip_norm must be >= 0");
  }
};

}  // namespace visualtts

#endif  // VISUALTTS_CONFIG_H_
