// tests/test_toy_data.cc

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

#include <cstring>

#include <doctest.h>

#include "test_util.h"
#include "visualtts/manifest.h"
#include "visualtts/metrics.h"
#include "visualtts/toy_data.h"

using namespace visualtts;
using visualtts::testing::ReadAllBytes;
using visualtts::testing::TempDir;

TEST_SUITE_BEGIN("toy_data");

TEST_CASE("symbol durations cycle through 4..8 video frames") {
  CHECK(ToySymbolDuration('a') == 4);
  CHECK(ToySymbolDuration('b') == 5);
  CHECK(ToySymbolDuration('c') == 6);
  CHECK(ToySymbolDuration('d') == 7);
  CHECK(ToySymbolDuration('e') == 8);
  CHECK(ToySymbolDuration('f') == 4);
  CHECK(ToySymbolDuration('l') == 5);
  CHECK_THROWS_AS(ToySymbolDuration('m'), ValidationError);
  CHECK_THROWS_AS(ToySymbolDuration('A'), ValidationError);
}

TEST_CASE("apertures and mel energy both grow with the symbol index") {
  CHECK(ToySymbolAperture('a') == 8);
  CHECK(ToySymbolAperture('l') == 30);
  double prev_energy = -1.0;
  for (char c = 'a'; c <= 'l'; ++c) {
    CHECK(ToySymbolAperture(c) == 8 + 2 * (c - 'a'));
    const double energy = ToySymbolMelTemplate(c).cast<double>().mean();
    CHECK(energy > prev_energy);
    prev_energy = energy;
  }
}

TEST_CASE("utterance lengths follow symbol durations with the 4x mel contract") {
  const ToyUtterance utt = MakeToyUtterance("aca", 0, 7, 0, "u0");
  CHECK(utt.record.num_video_frames == 14);  // 4 + 6 + 4
  CHECK(utt.lips.num_frames == 14);
  CHECK(utt.mel.length() == 56);
  CHECK_NOTHROW(CheckLengthContract("u0", utt.record.num_video_frames, utt.mel.length()));
  CHECK(utt.record.text == "aca");
  CHECK_NOTHROW(utt.lips.Validate());
  CHECK_NOTHROW(utt.mel.Validate());
}

TEST_CASE("rendering is deterministic in its arguments") {
  const ToyUtterance a = MakeToyUtterance("bad", 1, 42, 3, "u");
  const ToyUtterance b = MakeToyUtterance("bad", 1, 42, 3, "u");
  REQUIRE(a.lips.data.size() == b.lips.data.size());
  CHECK(std::memcmp(a.lips.data.data(), b.lips.data.data(),
                    4 * a.lips.data.size()) == 0);
  CHECK(a.mel.frames == b.mel.frames);

  const ToyUtterance c = MakeToyUtterance("bad", 1, 42, 4, "u");
  CHECK(a.mel.frames != c.mel.frames);
  const ToyUtterance d = MakeToyUtterance("bad", 1, 43, 3, "u");
  CHECK(a.mel.frames != d.mel.frames);
}

TEST_CASE("speaker bias shifts mels but not lips") {
  const ToyUtterance s0 = MakeToyUtterance("cab", 0, 5, 0, "u");
  const ToyUtterance s1 = MakeToyUtterance("cab", 1, 5, 0, "u");
  CHECK(std::memcmp(s0.lips.data.data(), s1.lips.data.data(),
                    4 * s0.lips.data.size()) == 0);
  CHECK(s0.mel.frames != s1.mel.frames);
  const VecXf diff_expected = ToySpeakerBias(5, 0) - ToySpeakerBias(5, 1);
  const VecXf diff_actual = s0.mel.frames.row(0) - s1.mel.frames.row(0);
  CHECK((diff_actual - diff_expected.transpose()).cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("lip openness feature separates small, medium and wide mouths") {
  // Single-symbol utterances with increasing aperture.
  const ToyUtterance narrow = MakeToyUtterance("a", 0, 11, 0, "u");   // aperture 8
  const ToyUtterance medium = MakeToyUtterance("f", 0, 11, 0, "u");   // aperture 18
  const ToyUtterance wide = MakeToyUtterance("l", 0, 11, 0, "u");     // aperture 30
  const double o_narrow = LipOpennessPerFrame(narrow.lips).mean();
  const double o_medium = LipOpennessPerFrame(medium.lips).mean();
  const double o_wide = LipOpennessPerFrame(wide.lips).mean();
  CHECK(o_narrow < o_medium);
  CHECK(o_medium < o_wide);
}

TEST_CASE("dataset writer produces a loadable, reproducible corpus") {
  TempDir tmp("toyset");
  ToyDatasetOptions options;
  options.seed = 9;
  options.num_utterances = 6;
  options.num_speakers = 3;

  const auto manifest_path = MakeToyDataset(options, tmp.path() / "d1");
  const auto records = ReadManifest(manifest_path);
  REQUIRE(records.size() == 6);
  for (const auto &rec : records) {
    CHECK(rec.text.size() >= 3);
    CHECK(rec.text.size() <= 8);
    CHECK(rec.speaker_id >= 0);
    CHECK(rec.speaker_id < 3);
    const LipSequence lips = LoadLips(rec, manifest_path.parent_path());
    const MelSpectrogram mel = LoadMel(rec, manifest_path.parent_path());
    CHECK(lips.num_frames == rec.num_video_frames);
    CHECK(mel.length() == static_cast<Eigen::Index>(4 * rec.num_video_frames));
  }

  const auto manifest_path2 = MakeToyDataset(options, tmp.path() / "d2");
  CHECK(ReadAllBytes(manifest_path) == ReadAllBytes(manifest_path2));
  CHECK(ReadAllBytes(manifest_path.parent_path() / records[0].mel_path) ==
        ReadAllBytes(manifest_path2.parent_path() / records[0].mel_path));
}

TEST_CASE("dataset options are validated") {
  TempDir tmp("toyopt");
  ToyDatasetOptions options;
  options.num_utterances = 0;
  CHECK_THROWS_AS(MakeToyDataset(options, tmp.path()), ValidationError);
  options.num_utterances = 1;
  options.num_speakers = 0;
  CHECK_THROWS_AS(MakeToyDataset(options, tmp.path()), ValidationError);
}

TEST_SUITE_END();
