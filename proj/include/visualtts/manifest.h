// include/visualtts/manifest.h

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

#ifndef VISUALTTS_MANIFEST_H_
#define VISUALTTS_MANIFEST_H_

#include <filesystem>
#include <vector>

#include "visualtts/types.h"

namespace visualtts {

// Dataset manifests are JSON Lines: one utterance record per line with
// exactly the keys utt_id, speaker_id, text, lip_path, mel_path and
// num_video_frames, written in that order.  mel_path may be "" for
// inference-only entries.  Paths are resolved relative to the manifest file.

void WriteManifest(const std::vector<UtteranceRecord> &records,
                   const std::filesystem::path &path);

std::vector<UtteranceRecord> ReadManifest(const std::filesystem::path &path);

// Loads the lip tensor (and mel tensor, when present) referenced by a record,
// checking shapes, value ranges and the 4x length contract.
LipSequence LoadLips(const UtteranceRecord &record, const std::filesystem::path &base_dir);
MelSpectrogram LoadMel(const UtteranceRecord &record, const std::filesystem::path &base_dir);

}  // namespace visualtts

#endif  // VISUALTTS_MANIFEST_H_
