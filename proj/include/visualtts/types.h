// include/visualtts/types.h

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

#ifndef VISUALTTS_TYPES_H_
#define VISUALTTS_TYPES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "visualtts/common.h"
#include "visualtts/tensor.h"

namespace visualtts {

// Audio and video timing constants.  Mel frames run at 24000 / 240 = 100 Hz
// and lip video at 25 Hz, so every video frame spans exactly four mel frames.
// That integer ratio is what lets synthesis stop purely on video length.
constexpr int kSampleRate = 24000;
constexpr int kHopSamples = 240;
constexpr int kWinSamples = 960;
constexpr int kNumMels = 80;
constexpr int kVideoFps = 25;
constexpr int kMelFramesPerVideoFrame = 4;
constexpr int kLipSize = 88;
constexpr int kFftBins = kWinSamples / 2 + 1;  // 481 for the 960-point window

/// Grayscale mouth-region crops, one kLipSize x kLipSize frame per video
/// frame, values in [0, 1], stored frame-major.
struct LipSequence {
  std::size_t num_frames = 0;
  std::vector<float> data;  // num_frames * kLipSize * kLipSize

  static constexpr std::size_t kFrameElems =
      static_cast<std::size_t>(kLipSize) * static_cast<std::size_t>(kLipSize);

  LipSequence() = default;
  explicit LipSequence(std::size_t n) : num_frames(n), data(n * kFrameElems, 0.0f) {}

  float *frame(std::size_t t) { return data.data() + t * kFrameElems; }
  const float *frame(std::size_t t) const { return data.data() + t * kFrameElems; }

  float &at(std::size_t t, int y, int x) {
    return data[t * kFrameElems + static_cast<std::size_t>(y) * kLipSize +
                static_cast<std::size_t>(x)];
  }
  float at(std::size_t t, int y, int x) const {
    return data[t * kFrameElems + static_cast<std::size_t>(y) * kLipSize +
                static_cast<std::size_t>(x)];
  }

  void Validate() const {
    if (num_frames == 0) throw DataError("lip sequence has zero frames");
    if (data.size() != num_frames * kFrameElems) {
      throw DataError("lip sequence payload does not match frame count");
    }
    for (float v : data) {
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw DataError("lip pixel outside [0, 1] or non-finite");
      }
    }
  }

  NdArray ToTensor() const {
    NdArray t;
    t.dims = {static_cast<std::uint32_t>(num_frames), kLipSize, kLipSize};
    t.data = data;
    return t;
  }

  static LipSequence FromTensor(const NdArray &t) {
    t.Validate();
    if (t.rank() != 3 || t.dims[1] != kLipSize || t.dims[2] != kLipSize) {
      throw DataError("lip tensor must have shape [T, 88, 88]");
    }
    LipSequence lips;
    lips.num_frames = t.dims[0];
    lips.data = t.data;
    lips.Validate();
    return lips;
  }
};

/// Mel spectrogram, one row per 10 ms frame, kNumMels columns.
struct MelSpectrogram {
  MatXf frames;  // T x kNumMels

  MelSpectrogram() = default;
  explicit MelSpectrogram(MatXf f) : frames(std::move(f)) {}

  Eigen::Index length() const { return frames.rows(); }

  void Validate() const {
    if (frames.rows() == 0) throw DataError("mel spectrogram has zero frames");
    if (frames.cols() != kNumMels) {
      throw DataError("mel spectrogram must have " + std::to_string(kNumMels) +
                      " bands, got " + std::to_string(frames.cols()));
    }
    if (!frames.allFinite()) throw DataError("mel spectrogram contains NaN or Inf");
  }

  NdArray ToTensor() const { return MatrixToTensor<float>(frames); }

  static MelSpectrogram FromTensor(const NdArray &t) {
    if (t.rank() != 2 || t.dims[1] != kNumMels) {
      throw DataError("mel tensor must have shape [T, 80]");
    }
    MelSpectrogram mel(TensorToMatrix<float>(t));
    mel.Validate();
    return mel;
  }
};

/// One dataset entry.  Paths are relative to the manifest's directory.
/// mel_path is empty for inference-only entries.
struct UtteranceRecord {
  std::string utt_id;
  int speaker_id = 0;
  std::string text;
  std::string lip_path;
  std::string mel_path;
  std::uint32_t num_video_frames = 0;

  void Validate() const {
    if (utt_id.empty()) throw DataError("utterance record has empty utt_id");
    if (speaker_id < 0) throw DataError(utt_id + ": negative speaker_id");
    if (text.empty()) throw DataError(utt_id + ": empty text");
    if (lip_path.empty()) throw DataError(utt_id + ": empty lip_path");
    if (num_video_frames == 0) throw DataError(utt_id + ": zero num_video_frames");
  }
};

// The stop rule: an utterance with T_v video frames always has exactly
// 4 * T_v mel frames.  Call sites that pair a mel with its video use this to
// reject inconsistent data early.
inline void CheckLengthContract(const std::string &utt_id, std::size_t num_video_frames,
                                Eigen::Index num_mel_frames) {
  if (num_mel_frames !=
      static_cast<Eigen::Index>(num_video_frames) * kMelFramesPerVideoFrame) {
    throw DataError(utt_id + ": mel length " + std::to_string(num_mel_frames) +
                    " does not equal 4 x " + std::to_string(num_video_frames) +
                    " video frames");
  }
}

}  // namespace visualtts

#endif  // VISUALTTS_TYPES_H_
