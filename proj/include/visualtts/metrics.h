// include/visualtts/metrics.h

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

#ifndef VISUALTTS_METRICS_H_
#define VISUALTTS_METRICS_H_

#include <utility>
#include <vector>

#include "visualtts/types.h"

namespace visualtts {

// Evaluation runs in double regardless of the model's scalar type; the
// quantities are tiny compared to training and the extra precision makes the
// dynamic-programming results reproducible to the last bit.

struct DtwResult {
  // Monotone warping path from (0, 0) to (rows_a - 1, rows_b - 1) using
  // steps (1,0), (0,1) and (1,1).
  std::vector<std::pair<int, int>> path;
  double total_cost = 0.0;
};

// Dynamic time warping between two frame sequences (rows are frames) under
// Euclidean frame distance.  Ties in the DP minimum prefer the diagonal
// step, then the step advancing in a; backtracking applies the same order,
// so the path is unique and deterministic.
DtwResult DtwAlign(const MatXd &a, const MatXd &b);

// Frame disturbance: DTW-align synth against reference, then the root mean
// square of the frame index offsets (i - j) along the path.  Zero when the
// sequences align perfectly on the diagonal.
double FrameDisturbance(const MelSpectrogram &synth, const MelSpectrogram &reference);

// Audio-side feature for the agreement score: mean mel energy per video
// frame, i.e. each consecutive block of 4 mel frames averaged over time and
// band.  Length T_m / 4.
VecXd MelEnergyPerVideoFrame(const MelSpectrogram &mel);

// Video-side feature: mean absolute vertical intensity gradient inside the
// central 20-column band of each frame.  Tracks how open the mouth is.
VecXd LipOpennessPerFrame(const LipSequence &lips);

struct SyncScore {
  double distance_like = 0.0;    // feature distance at the best offset
  double confidence_like = 0.0;  // median offset distance minus the minimum
  int best_offset = 0;           // >0 means audio lags video
};

// Audio-visual agreement proxy.  Both feature tracks are z-normalized, then
// mean absolute difference is computed at every integer offset in
// [-max_offset, max_offset]; the best offset is the minimizer (ties prefer
// the smaller absolute offset).  The tracks must be long enough that
// 2 * max_offset + 1 offsets are measurable.
SyncScore SyncProxy(const MelSpectrogram &mel, const LipSequence &lips,
                    int max_offset = 15);

}  // namespace visualtts

#endif  // VISUALTTS_METRICS_H_
