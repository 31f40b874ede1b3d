// src/metrics.cc

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

#include "visualtts/metrics.h"

#include <algorithm>
#include <cmath>

namespace visualtts {

namespace {

enum Move : std::uint8_t { kStart = 0, kDiag = 1, kFromA = 2, kFromB = 3 };

}  // namespace

DtwResult DtwAlign(const MatXd &a, const MatXd &b) {
  if (a.rows() == 0 || b.rows() == 0) {
    throw ValidationError("DTW inputs must have at least one frame");
  }
  if (a.cols() != b.cols()) {
    throw ValidationError("DTW inputs must have the same frame dimension");
  }
  CheckFinite(a, "DTW input a");
  CheckFinite(b, "DTW input b");

  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.rows());
  MatXd cost(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      cost(i, j) = (a.row(i) - b.row(j)).norm();
    }
  }

  MatXd acc(n, m);
  MatX<std::uint8_t> move(n, m);
  acc(0, 0) = cost(0, 0);
  move(0, 0) = kStart;
  for (int i = 1; i < n; ++i) {
    acc(i, 0) = acc(i - 1, 0) + cost(i, 0);
    move(i, 0) = kFromA;
  }
  for (int j = 1; j < m; ++j) {
    acc(0, j) = acc(0, j - 1) + cost(0, j);
    move(0, j) = kFromB;
  }
  for (int i = 1; i < n; ++i) {
    for (int j = 1; j < m; ++j) {
      // Preference on exact ties: diagonal, then advancing in a, then in b.
      double best = acc(i - 1, j - 1);
      std::uint8_t mv = kDiag;
      if (acc(i - 1, j) < best) {
        best = acc(i - 1, j);
        mv = kFromA;
      }
      if (acc(i, j - 1) < best) {
        best = acc(i, j - 1);
        mv = kFromB;
      }
      acc(i, j) = best + cost(i, j);
      move(i, j) = mv;
    }
  }

  DtwResult result;
  result.total_cost = acc(n - 1, m - 1);
  int i = n - 1, j = m - 1;
  while (true) {
    result.path.emplace_back(i, j);
    const std::uint8_t mv = move(i, j);
    if (mv == kStart) break;
    if (mv == kDiag) {
      --i;
      --j;
    } else if (mv == kFromA) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(result.path.begin(), result.path.end());
  return result;
}

double FrameDisturbance(const MelSpectrogram &synth, const MelSpectrogram &reference) {
  synth.Validate();
  reference.Validate();
  const DtwResult dtw =
      DtwAlign(synth.frames.cast<double>(), reference.frames.cast<double>());
  double sq = 0.0;
  for (const auto &[i, j] : dtw.path) {
    const double d = static_cast<double>(i - j);
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(dtw.path.size()));
}

VecXd MelEnergyPerVideoFrame(const MelSpectrogram &mel) {
  mel.Validate();
  if (mel.length() % kMelFramesPerVideoFrame != 0) {
    throw DataError("mel length " + std::to_string(mel.length()) +
                    " is not a multiple of " + std::to_string(kMelFramesPerVideoFrame));
  }
  const Eigen::Index frames = mel.length() / kMelFramesPerVideoFrame;
  VecXd e(frames);
  for (Eigen::Index f = 0; f < frames; ++f) {
    e[f] = mel.frames.block(f * kMelFramesPerVideoFrame, 0, kMelFramesPerVideoFrame, kNumMels)
               .cast<double>()
               .mean();
  }
  return e;
}

VecXd LipOpennessPerFrame(const LipSequence &lips) {
  lips.Validate();
  constexpr int kBandWidth = 20;
  constexpr int kBandStart = (kLipSize - kBandWidth) / 2;  // columns 34..53
  VecXd openness(static_cast<Eigen::Index>(lips.num_frames));
  for (std::size_t t = 0; t < lips.num_frames; ++t) {
    double sum = 0.0;
    for (int y = 0; y + 1 < kLipSize; ++y) {
      for (int x = kBandStart; x < kBandStart + kBandWidth; ++x) {
        sum += std::abs(static_cast<double>(lips.at(t, y + 1, x)) -
                        static_cast<double>(lips.at(t, y, x)));
      }
    }
    openness[static_cast<Eigen::Index>(t)] =
        sum / static_cast<double>((kLipSize - 1) * kBandWidth);
  }
  return openness;
}

namespace {

VecXd ZNormalize(const VecXd &v, const char *what) {
  const double mean = v.mean();
  const double var = (v.array() - mean).square().mean();
  if (var < 1e-24) {
    throw ValidationError(std::string(what) + " feature track has zero variance");
  }
  return (v.array() - mean) / std::sqrt(var);
}

}  // namespace

SyncScore SyncProxy(const MelSpectrogram &mel, const LipSequence &lips, int max_offset) {
  if (max_offset < 0) throw ValidationError("max_offset must be non-negative");
  const VecXd audio_raw = MelEnergyPerVideoFrame(mel);
  const VecXd video_raw = LipOpennessPerFrame(lips);
  if (audio_raw.size() != video_raw.size()) {
    throw DataError("mel covers " + std::to_string(audio_raw.size()) +
                    " video frames but lips have " + std::to_string(video_raw.size()));
  }
  const Eigen::Index frames = audio_raw.size();
  if (frames < 2 * max_offset + 1) {
    throw ValidationError("need at least " + std::to_string(2 * max_offset + 1) +
                          " video frames for max_offset " + std::to_string(max_offset) +
                          ", got " + std::to_string(frames));
  }

  const VecXd audio = ZNormalize(audio_raw, "audio");
  const VecXd video = ZNormalize(video_raw, "video");

  // distance(o) compares audio[i + o] with video[i] over the overlap, so a
  // positive best offset means the audio track trails the video track.
  auto distance_at = [&](int o) {
    const Eigen::Index lo = std::max(0, -o);
    const Eigen::Index hi = frames - 1 - std::max(0, o);
    double sum = 0.0;
    for (Eigen::Index i = lo; i <= hi; ++i) sum += std::abs(audio[i + o] - video[i]);
    return sum / static_cast<double>(hi - lo + 1);
  };

  std::vector<double> distances(static_cast<std::size_t>(2 * max_offset + 1));
  for (int o = -max_offset; o <= max_offset; ++o) {
    distances[static_cast<std::size_t>(o + max_offset)] = distance_at(o);
  }

  // Scan offsets by increasing magnitude (0, -1, +1, -2, ...) with
  // strictly-less updates, so exact ties resolve to the smallest |offset|.
  SyncScore score;
  double best = distances[static_cast<std::size_t>(max_offset)];
  score.best_offset = 0;
  for (int mag = 1; mag <= max_offset; ++mag) {
    for (int o : {-mag, mag}) {
      const double d = distances[static_cast<std::size_t>(o + max_offset)];
      if (d < best) {
        best = d;
        score.best_offset = o;
      }
    }
  }
  score.distance_like = best;

  std::vector<double> sorted = distances;
  const std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid),
                   sorted.end());
  score.confidence_like = sorted[mid] - best;
  return score;
}

}  // namespace visualtts
