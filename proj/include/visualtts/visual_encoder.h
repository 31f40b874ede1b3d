// include/visualtts/visual_encoder.h

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

#ifndef VISUALTTS_VISUAL_ENCODER_H_
#define VISUALTTS_VISUAL_ENCODER_H_

#include <string>
#include <vector>

#include "visualtts/config.h"
#include "visualtts/nn.h"
#include "visualtts/types.h"

namespace visualtts {

// Lip-sequence encoder: a 3-D convolution stem (kernel {5,7,7}, stride
// {1,2,2}, padding {2,3,3}) followed by a per-frame ResNet-18 trunk, global
// average pooling and a linear map to visual_dim.  Temporal stride 1 keeps
// one output row per video frame.
//
// All parameters are frozen: they are registered without gradient buffers,
// the optimizer never touches them, and there is no backward pass.  Batch
// norm always uses its running buffers, which stay at their initial mean 0 /
// variance 1 unless a checkpoint overwrites them.
//
// Feature maps are pixel-major: an H x W map with C channels is a
// [H*W x C] matrix, so every convolution is one im2col plus one GEMM.

template <typename S>
class VisualEncoder {
 public:
  VisualEncoder(const ModelConfig &cfg, nn::ParamRegistry<S> &reg,
                bool frozen = true)
      : cfg_(cfg) {
    if (!frozen) {
      throw ValidationError(
          "training the visual encoder is not supported; it is always frozen");
    }
    stem_w_ = reg.AddWithDims(
        "visual.stem.w", cfg.stem_channels, 5 * 7 * 7,
        {static_cast<std::uint32_t>(cfg.stem_channels), 5, 7, 7}, true);
    stem_bn_ = nn::AddBatchNorm(reg, "visual.stem.bn", cfg.stem_channels, true);

    int cin = cfg.stem_channels;
    for (int stage = 0; stage < 4; ++stage) {
      const int cout = cfg.resnet_channels[stage];
      for (int b = 0; b < 2; ++b) {
        Block blk;
        blk.stride = (stage > 0 && b == 0) ? 2 : 1;
        blk.cin = cin;
        blk.cout = cout;
        const std::string prefix = "visual.layer" + std::to_string(stage + 1) +
                                   "." + std::to_string(b);
        blk.c1w = reg.AddWithDims(prefix + ".conv1.w", cout, 9 * cin,
                                  {static_cast<std::uint32_t>(cout),
                                   static_cast<std::uint32_t>(cin), 3, 3},
                                  true);
        blk.bn1 = nn::AddBatchNorm(reg, prefix + ".bn1", cout, true);
        blk.c2w = reg.AddWithDims(prefix + ".conv2.w", cout, 9 * cout,
                                  {static_cast<std::uint32_t>(cout),
                                   static_cast<std::uint32_t>(cout), 3, 3},
                                  true);
        blk.bn2 = nn::AddBatchNorm(reg, prefix + ".bn2", cout, true);
        if (blk.stride != 1 || cin != cout) {
          blk.down_w = reg.AddWithDims(prefix + ".down.w", cout, cin,
                                       {static_cast<std::uint32_t>(cout),
                                        static_cast<std::uint32_t>(cin), 1, 1},
                                       true);
          blk.down_bn = nn::AddBatchNorm(reg, prefix + ".down_bn", cout, true);
        }
        blocks_.push_back(blk);
        cin = cout;
      }
    }

    fc_w_ = reg.Add("visual.fc.w", cfg.visual_dim, cin, true);
    fc_b_ = reg.Add("visual.fc.b", cfg.visual_dim, 1, true);
  }

  // He-style initialization; stands in for the out-of-scope lip-reading
  // pretraining, so checkpoints can overwrite all of it.
  void Init(std::mt19937 &rng) {
    nn::NormalInit(stem_w_, std::sqrt(2.0 / static_cast<double>(stem_w_->cols())), rng);
    for (auto &blk : blocks_) {
      nn::NormalInit(blk.c1w, std::sqrt(2.0 / static_cast<double>(blk.c1w->cols())), rng);
      nn::NormalInit(blk.c2w, std::sqrt(2.0 / static_cast<double>(blk.c2w->cols())), rng);
      if (blk.down_w != nullptr) {
        nn::NormalInit(blk.down_w,
                       std::sqrt(2.0 / static_cast<double>(blk.down_w->cols())), rng);
      }
    }
    nn::GlorotInit(fc_w_, rng);
  }

  // [T_v x visual_dim], one row per video frame.
  MatX<S> Forward(const LipSequence &lips) const {
    std::vector<MatX<S>> maps = StemConvOutput(lips);
    const Eigen::Index t_len = static_cast<Eigen::Index>(maps.size());
    MatX<S> out(t_len, cfg_.visual_dim);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      MatX<S> m = nn::BatchNormForwardRunning(stem_bn_, maps[t]);
      m = nn::Relu(m);
      int h = kStemSize;
      m = MaxPool2d(m, h, 3, 2, 1);
      h = PooledSize(h, 3, 2, 1);
      for (const auto &blk : blocks_) {
        m = RunBlock(blk, m, h);
        h = PooledSize(h, 3, blk.stride, 1);
      }
      const VecX<S> pooled = m.colwise().mean().transpose();
      out.row(t) =
          (fc_w_->value * pooled + fc_b_->value.col(0)).transpose();
    }
    CheckFinite(out, "visual embedding");
    return out;
  }

  // Raw stem convolution output, one [44*44 x stem_channels] map per frame,
  // before batch norm.  The stem has temporal stride 1 and padding 2, so
  // shifting the input in time shifts these maps in time wherever the
  // receptive field stays inside the clip; tests rely on that.
  std::vector<MatX<S>> StemConvOutput(const LipSequence &lips) const {
    lips.Validate();
    const Eigen::Index t_len = static_cast<Eigen::Index>(lips.num_frames);
    std::vector<MatX<S>> maps;
    maps.reserve(static_cast<std::size_t>(t_len));
    constexpr int kOut = kStemSize;
    MatX<S> xcol(kOut * kOut, 5 * 49);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      xcol.setZero();
      for (int dt = 0; dt < 5; ++dt) {
        const Eigen::Index src_t = t + dt - 2;
        if (src_t < 0 || src_t >= t_len) continue;
        const float *frame = lips.frame(static_cast<std::size_t>(src_t));
        for (int ky = 0; ky < 7; ++ky) {
          for (int kx = 0; kx < 7; ++kx) {
            const Eigen::Index col = dt * 49 + ky * 7 + kx;
            for (int oy = 0; oy < kOut; ++oy) {
              const int iy = oy * 2 - 3 + ky;
              if (iy < 0 || iy >= kLipSize) continue;
              for (int ox = 0; ox < kOut; ++ox) {
                const int ix = ox * 2 - 3 + kx;
                if (ix < 0 || ix >= kLipSize) continue;
                xcol(oy * kOut + ox, col) =
                    static_cast<S>(frame[iy * kLipSize + ix]);
              }
            }
          }
        }
      }
      maps.push_back(xcol * stem_w_->value.transpose());
    }
    return maps;
  }

 private:
  static constexpr int kStemSize = kLipSize / 2;  // 44

  struct Block {
    nn::Param<S> *c1w = nullptr, *c2w = nullptr, *down_w = nullptr;
    nn::BatchNormParams<S> bn1, bn2, down_bn;
    int stride = 1;
    int cin = 0, cout = 0;
  };

  static int PooledSize(int h, int k, int stride, int pad) {
    return (h + 2 * pad - k) / stride + 1;
  }

  // 3x3 convolution with padding 1 on a pixel-major [h*h x Cin] map.
  static MatX<S> Conv3x3(const MatX<S> &x, int h, int stride, const MatX<S> &w) {
    const Eigen::Index cin = x.cols();
    const int ho = PooledSize(h, 3, stride, 1);
    MatX<S> xcol = MatX<S>::Zero(static_cast<Eigen::Index>(ho) * ho, 9 * cin);
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index col0 = (ky * 3 + kx) * cin;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - 1 + ky;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ho; ++ox) {
            const int ix = ox * stride - 1 + kx;
            if (ix < 0 || ix >= h) continue;
            xcol.block(static_cast<Eigen::Index>(oy) * ho + ox, col0, 1, cin) =
                x.block(static_cast<Eigen::Index>(iy) * h + ix, 0, 1, cin);
          }
        }
      }
    }
    return xcol * w.transpose();
  }

  static MatX<S> Conv1x1Strided(const MatX<S> &x, int h, int stride,
                                const MatX<S> &w) {
    const int ho = (h - 1) / stride + 1;
    MatX<S> rows(static_cast<Eigen::Index>(ho) * ho, x.cols());
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < ho; ++ox) {
        rows.row(static_cast<Eigen::Index>(oy) * ho + ox) =
            x.row(static_cast<Eigen::Index>(oy) * stride * h + ox * stride);
      }
    }
    return rows * w.transpose();
  }

  static MatX<S> MaxPool2d(const MatX<S> &x, int h, int k, int stride, int pad) {
    const Eigen::Index c = x.cols();
    const int ho = PooledSize(h, k, stride, pad);
    MatX<S> y = MatX<S>::Constant(static_cast<Eigen::Index>(ho) * ho, c,
                                  -std::numeric_limits<S>::infinity());
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < ho; ++ox) {
        const Eigen::Index out_row = static_cast<Eigen::Index>(oy) * ho + ox;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= h) continue;
            y.row(out_row) = y.row(out_row).cwiseMax(
                x.row(static_cast<Eigen::Index>(iy) * h + ix));
          }
        }
      }
    }
    return y;
  }

  MatX<S> RunBlock(const Block &blk, const MatX<S> &x, int h) const {
    MatX<S> y = Conv3x3(x, h, blk.stride, blk.c1w->value);
    y = nn::Relu(MatX<S>(nn::BatchNormForwardRunning(blk.bn1, y)));
    const int ho = PooledSize(h, 3, blk.stride, 1);
    y = Conv3x3(y, ho, 1, blk.c2w->value);
    y = nn::BatchNormForwardRunning(blk.bn2, y);
    if (blk.down_w != nullptr) {
      y += nn::BatchNormForwardRunning(
          blk.down_bn, MatX<S>(Conv1x1Strided(x, h, blk.stride, blk.down_w->value)));
    } else {
      y += x;
    }
    return nn::Relu(y);
  }

  ModelConfig cfg_;
  nn::Param<S> *stem_w_ = nullptr;
  nn::BatchNormParams<S> stem_bn_;
  std::vector<Block> blocks_;
  nn::Param<S> *fc_w_ = nullptr, *fc_b_ = nullptr;
};

}  // namespace visualtts

#endif  // VISUALTTS_VISUAL_ENCODER_H_
