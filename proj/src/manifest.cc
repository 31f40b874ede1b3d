// src/manifest.cc

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

#include "visualtts/manifest.h"

#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

namespace visualtts {

namespace {

const std::set<std::string> kRecordKeys = {"utt_id",   "speaker_id",       "text",
                                           "lip_path", "mel_path",         "num_video_frames"};

UtteranceRecord ParseRecordLine(const std::string &line, const std::string &where) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error &e) {
    throw FormatError(where + ": not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw FormatError(where + ": line is not a JSON object");

  for (const auto &item : j.items()) {
    if (kRecordKeys.count(item.key()) == 0) {
      throw FormatError(where + ": unexpected key \"" + item.key() + "\"");
    }
  }
  for (const auto &key : kRecordKeys) {
    if (!j.contains(key)) throw FormatError(where + ": missing key \"" + key + "\"");
  }

  UtteranceRecord r;
  try {
    r.utt_id = j.at("utt_id").get<std::string>();
    r.speaker_id = j.at("speaker_id").get<int>();
    r.text = j.at("text").get<std::string>();
    r.lip_path = j.at("lip_path").get<std::string>();
    r.mel_path = j.at("mel_path").get<std::string>();
    r.num_video_frames = j.at("num_video_frames").get<std::uint32_t>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(where + ": wrong field type: " + e.what());
  }
  r.Validate();
  return r;
}

}  // namespace

void WriteManifest(const std::vector<UtteranceRecord> &records,
                   const std::filesystem::path &path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto &r : records) {
    r.Validate();
    nlohmann::ordered_json j;
    j["utt_id"] = r.utt_id;
    j["speaker_id"] = r.speaker_id;
    j["text"] = r.text;
    j["lip_path"] = r.lip_path;
    j["mel_path"] = r.mel_path;
    j["num_video_frames"] = r.num_video_frames;
    os << j.dump() << "\n";
  }
  if (!os) throw IoError("short write to " + path.string());
}

std::vector<UtteranceRecord> ReadManifest(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest " + path.string());
  std::vector<UtteranceRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    records.push_back(
        ParseRecordLine(line, path.string() + ":" + std::to_string(line_no)));
  }
  if (records.empty()) throw FormatError(path.string() + ": manifest has no records");
  return records;
}

LipSequence LoadLips(const UtteranceRecord &record, const std::filesystem::path &base_dir) {
  LipSequence lips = LipSequence::FromTensor(ReadTensor(base_dir / record.lip_path));
  if (lips.num_frames != record.num_video_frames) {
    throw DataError(record.utt_id + ": manifest says " +
                    std::to_string(record.num_video_frames) + " video frames but " +
                    record.lip_path + " holds " + std::to_string(lips.num_frames));
  }
  return lips;
}

MelSpectrogram LoadMel(const UtteranceRecord &record, const std::filesystem::path &base_dir) {
  if (record.mel_path.empty()) {
    throw DataError(record.utt_id + ": record has no mel_path");
  }
  MelSpectrogram mel = MelSpectrogram::FromTensor(ReadTensor(base_dir / record.mel_path));
  CheckLengthContract(record.utt_id, record.num_video_frames, mel.length());
  return mel;
}

}  // namespace visualtts
