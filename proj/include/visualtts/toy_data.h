// include/visualtts/toy_data.h

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

#ifndef VISUALTTS_TOY_DATA_H_
#define VISUALTTS_TOY_DATA_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "visualtts/types.h"

namespace visualtts {

/// Synthetic audiovisual corpus for desk-scale experiments.
///
/// Texts are strings over the twelve symbols 'a'..'l'.  Each symbol has a
/// fixed video duration of 4..8 frames, a fixed mouth opening (the vertical
/// semi-axis of an ellipse painted into the 88x88 lip frame), and a fixed
/// 80-band mel template whose overall energy grows with the mouth opening.
/// Lips get +-2 px center jitter per frame, both streams get sigma = 0.01
/// Gaussian noise, and every speaker adds a small per-band mel bias.  Mel
/// length is exactly four times video length by construction.
///
/// The mapping symbol -> (duration, opening, energy) is what makes the corpus
/// learnable and measurable: energy and opening are both monotone in the
/// symbol index, so the audio-visual agreement score has real signal, and
/// durations differ so alignment is non-trivial.

constexpr int kToyAlphabetSize = 12;  // symbols 'a' .. 'l'

// Video frames a symbol occupies: 4 + (index mod 5), in {4..8}.
int ToySymbolDuration(char symbol);

// Vertical semi-axis of the mouth ellipse in pixels: 8 + 2 * index.
int ToySymbolAperture(char symbol);

// The 80-band mel template for a symbol: a small floor plus two Gaussian
// humps whose amplitude grows with the symbol index.
VecXf ToySymbolMelTemplate(char symbol);

// Per-speaker mel bias, 80 bands, sigma = 0.03.  A pure function of
// (dataset seed, speaker id).
VecXf ToySpeakerBias(std::uint64_t dataset_seed, int speaker_id);

// Total video frames for a text, i.e. the sum of symbol durations.
int ToyTextVideoFrames(const std::string &text);

struct ToyUtterance {
  UtteranceRecord record;  // lip_path / mel_path filled by MakeToyDataset
  LipSequence lips;
  MelSpectrogram mel;
};

// Renders one utterance.  Deterministic in all arguments; utt_index selects
// the jitter/noise stream so regenerating a dataset never depends on order.
ToyUtterance MakeToyUtterance(const std::string &text, int speaker_id,
                              std::uint64_t dataset_seed, std::uint64_t utt_index,
                              const std::string &utt_id);

struct ToyDatasetOptions {
  std::uint64_t seed = 0;
  int num_utterances = 32;
  int num_speakers = 4;
};

// Writes lips/<utt>.tensor, mels/<utt>.tensor and manifest.jsonl under
// out_dir and returns the manifest path.  Texts are 3..8 random symbols.
std::filesystem::path MakeToyDataset(const ToyDatasetOptions &options,
                                     const std::filesystem::path &out_dir);

}  // namespace visualtts

#endif  // VISUALTTS_TOY_DATA_H_
