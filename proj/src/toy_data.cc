// src/toy_data.cc

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

#include "visualtts/toy_data.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "visualtts/manifest.h"
#include "visualtts/tensor.h"

namespace visualtts {

namespace {

// Seed stream tags, arbitrary but fixed.
constexpr std::uint64_t kStreamComposition = 0xc0de0001ULL;
constexpr std::uint64_t kStreamUtterance = 0xc0de0002ULL;
constexpr std::uint64_t kStreamSpeaker = 0xc0de0003ULL;

constexpr int kEllipseSemiAxisX = 28;
constexpr int kLipCenter = kLipSize / 2;  // 44
constexpr float kLipBackground = 0.05f;

int SymbolIndex(char symbol) {
  if (symbol < 'a' || symbol >= 'a' + kToyAlphabetSize) {
    throw ValidationError(std::string("toy symbol '") + symbol +
                          "' outside alphabet a..l");
  }
  return symbol - 'a';
}

void CheckToyText(const std::string &text) {
  if (text.empty()) throw ValidationError("toy text is empty");
  for (char c : text) SymbolIndex(c);
}

// Paints one lip frame: flat background with a filled mouth ellipse whose
// interior brightness increases away from the center row.  The brightness
// ramp gives the frame a vertical gradient that scales with the opening, so
// a simple gradient statistic recovers the aperture.
void PaintLipFrame(float *frame, int aperture, int jitter_x, int jitter_y) {
  const int cx = kLipCenter + jitter_x;
  const int cy = kLipCenter + jitter_y;
  const float inv_ax2 =
      1.0f / static_cast<float>(kEllipseSemiAxisX * kEllipseSemiAxisX);
  const float inv_ay2 = 1.0f / static_cast<float>(aperture * aperture);
  for (int y = 0; y < kLipSize; ++y) {
    for (int x = 0; x < kLipSize; ++x) {
      const float dx = static_cast<float>(x - cx);
      const float dy = static_cast<float>(y - cy);
      float v = kLipBackground;
      if (dx * dx * inv_ax2 + dy * dy * inv_ay2 <= 1.0f) {
        v = std::min(0.92f, 0.15f + 0.02f * std::abs(dy));
      }
      frame[y * kLipSize + x] = v;
    }
  }
}

}  // namespace

int ToySymbolDuration(char symbol) { return 4 + SymbolIndex(symbol) % 5; }

int ToySymbolAperture(char symbol) { return 8 + 2 * SymbolIndex(symbol); }

VecXf ToySymbolMelTemplate(char symbol) {
  const int idx = SymbolIndex(symbol);
  const float amp = 0.3f + 0.06f * static_cast<float>(idx);
  const float c1 = 6.0f + 6.0f * static_cast<float>(idx);
  const float c2 = 76.0f - 6.0f * static_cast<float>(idx);
  VecXf mel(kNumMels);
  for (int b = 0; b < kNumMels; ++b) {
    const float d1 = static_cast<float>(b) - c1;
    const float d2 = static_cast<float>(b) - c2;
    mel[b] = 0.08f + amp * std::exp(-d1 * d1 / 18.0f) +
             0.5f * amp * std::exp(-d2 * d2 / 18.0f);
  }
  return mel;
}

VecXf ToySpeakerBias(std::uint64_t dataset_seed, int speaker_id) {
  if (speaker_id < 0) throw ValidationError("negative speaker_id");
  std::mt19937 rng = MakeRng(
      MixSeed(dataset_seed, kStreamSpeaker, static_cast<std::uint64_t>(speaker_id)));
  std::normal_distribution<float> bias(0.0f, 0.03f);
  VecXf v(kNumMels);
  for (int b = 0; b < kNumMels; ++b) v[b] = bias(rng);
  return v;
}

int ToyTextVideoFrames(const std::string &text) {
  CheckToyText(text);
  int frames = 0;
  for (char c : text) frames += ToySymbolDuration(c);
  return frames;
}

ToyUtterance MakeToyUtterance(const std::string &text, int speaker_id,
                              std::uint64_t dataset_seed, std::uint64_t utt_index,
                              const std::string &utt_id) {
  CheckToyText(text);
  if (speaker_id < 0) throw ValidationError("negative speaker_id");

  const int num_video = ToyTextVideoFrames(text);
  const int num_mel = num_video * kMelFramesPerVideoFrame;

  std::mt19937 rng = MakeRng(MixSeed(dataset_seed, kStreamUtterance, utt_index));
  std::uniform_int_distribution<int> jitter(-2, 2);
  std::normal_distribution<float> noise(0.0f, 0.01f);

  ToyUtterance utt;
  utt.lips = LipSequence(static_cast<std::size_t>(num_video));

  // Per-frame symbol index, stepping through the text by symbol durations.
  std::vector<char> frame_symbol(static_cast<std::size_t>(num_video));
  {
    int f = 0;
    for (char c : text) {
      for (int d = 0; d < ToySymbolDuration(c); ++d) frame_symbol[f++] = c;
    }
  }

  for (int f = 0; f < num_video; ++f) {
    const int jx = jitter(rng);
    const int jy = jitter(rng);
    float *frame = utt.lips.frame(static_cast<std::size_t>(f));
    PaintLipFrame(frame, ToySymbolAperture(frame_symbol[static_cast<std::size_t>(f)]),
                  jx, jy);
    for (std::size_t i = 0; i < LipSequence::kFrameElems; ++i) {
      frame[i] = std::clamp(frame[i] + noise(rng), 0.0f, 1.0f);
    }
  }

  const VecXf bias = ToySpeakerBias(dataset_seed, speaker_id);
  MatXf mel(num_mel, kNumMels);
  for (int t = 0; t < num_mel; ++t) {
    const char c = frame_symbol[static_cast<std::size_t>(t / kMelFramesPerVideoFrame)];
    const VecXf tmpl = ToySymbolMelTemplate(c);
    for (int b = 0; b < kNumMels; ++b) {
      mel(t, b) = tmpl[b] + bias[b] + noise(rng);
    }
  }
  utt.mel = MelSpectrogram(std::move(mel));

  utt.record.utt_id = utt_id;
  utt.record.speaker_id = speaker_id;
  utt.record.text = text;
  utt.record.num_video_frames = static_cast<std::uint32_t>(num_video);
  utt.lips.Validate();
  utt.mel.Validate();
  return utt;
}

std::filesystem::path MakeToyDataset(const ToyDatasetOptions &options,
                                     const std::filesystem::path &out_dir) {
  if (options.num_utterances < 1) {
    throw ValidationError("num_utterances must be at least 1");
  }
  if (options.num_speakers < 1 || options.num_speakers > 1000) {
    throw ValidationError("num_speakers must be in 1..1000");
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "lips", ec);
  std::filesystem::create_directories(out_dir / "mels", ec);
  if (!std::filesystem::is_directory(out_dir / "lips") ||
      !std::filesystem::is_directory(out_dir / "mels")) {
    throw IoError("cannot create dataset directories under " + out_dir.string());
  }

  std::vector<UtteranceRecord> records;
  records.reserve(static_cast<std::size_t>(options.num_utterances));

  for (int i = 0; i < options.num_utterances; ++i) {
    std::mt19937 comp = MakeRng(
        MixSeed(options.seed, kStreamComposition, static_cast<std::uint64_t>(i)));
    std::uniform_int_distribution<int> num_symbols_dist(3, 8);
    std::uniform_int_distribution<int> symbol_dist(0, kToyAlphabetSize - 1);
    std::uniform_int_distribution<int> speaker_dist(0, options.num_speakers - 1);

    const int num_symbols = num_symbols_dist(comp);
    std::string text;
    for (int s = 0; s < num_symbols; ++s) {
      text.push_back(static_cast<char>('a' + symbol_dist(comp)));
    }
    const int speaker = speaker_dist(comp);

    char name[32];
    std::snprintf(name, sizeof(name), "utt_%05d", i);
    ToyUtterance utt = MakeToyUtterance(text, speaker, options.seed,
                                        static_cast<std::uint64_t>(i), name);

    utt.record.lip_path = std::string("lips/") + name + ".tensor";
    utt.record.mel_path = std::string("mels/") + name + ".tensor";
    WriteTensor(utt.lips.ToTensor(), out_dir / utt.record.lip_path);
    WriteTensor(utt.mel.ToTensor(), out_dir / utt.record.mel_path);
    records.push_back(utt.record);
  }

  const std::filesystem::path manifest = out_dir / "manifest.jsonl";
  WriteManifest(records, manifest);
  return manifest;
}

}  // namespace visualtts
