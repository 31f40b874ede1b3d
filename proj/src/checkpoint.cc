// src/checkpoint.cc

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

#include "visualtts/checkpoint.h"

#include <fstream>

#include <json.hpp>

namespace visualtts {

void WriteModelMeta(const std::string &path, const ModelMeta &meta) {
  meta.config.Validate();
  const ModelConfig &c = meta.config;
  nlohmann::ordered_json j;
  j["variant"] = ToString(meta.variant);
  nlohmann::ordered_json m;
  m["vocab_size"] = c.vocab_size;
  m["num_speakers"] = c.num_speakers;
  m["char_emb_dim"] = c.char_emb_dim;
  m["conv_bank_size"] = c.conv_bank_size;
  m["conv_bank_channels"] = c.conv_bank_channels;
  m["conv_proj_dim"] = c.conv_proj_dim;
  m["num_highway_layers"] = c.num_highway_layers;
  m["enc_lstm_dim"] = c.enc_lstm_dim;
  m["stem_channels"] = c.stem_channels;
  m["resnet_channels"] = {c.resnet_channels[0], c.resnet_channels[1],
                          c.resnet_channels[2], c.resnet_channels[3]};
  m["visual_dim"] = c.visual_dim;
  m["spk_dim"] = c.spk_dim;
  m["spk_proj_dim"] = c.spk_proj_dim;
  m["tva_heads"] = c.tva_heads;
  m["tva_head_dim"] = c.tva_head_dim;
  m["tva_out_dim"] = c.tva_out_dim;
  m["prenet_dim1"] = c.prenet_dim1;
  m["prenet_dim2"] = c.prenet_dim2;
  m["fusion_dim"] = c.fusion_dim;
  m["attn_rnn_dim"] = c.attn_rnn_dim;
  m["dec_lstm_dim"] = c.dec_lstm_dim;
  m["dec_attn_dim"] = c.dec_attn_dim;
  m["num_mels"] = c.num_mels;
  m["frames_per_step"] = c.frames_per_step;
  m["zoneout_rate"] = c.zoneout_rate;
  m["prenet_dropout"] = c.prenet_dropout;
  m["bn_momentum"] = c.bn_momentum;
  j["model"] = m;

  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << j.dump(2) << "\n";
  if (!os) throw IoError("short write to " + path);
}

ModelMeta ReadModelMeta(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error &e) {
    throw FormatError(path + ": not valid JSON: " + e.what());
  }
  ModelMeta meta;
  try {
    meta.variant = ParseModelVariant(j.at("variant").get<std::string>());
    const nlohmann::json &m = j.at("model");
    ModelConfig &c = meta.config;
    c.vocab_size = m.at("vocab_size").get<int>();
    c.num_speakers = m.at("num_speakers").get<int>();
    c.char_emb_dim = m.at("char_emb_dim").get<int>();
    c.conv_bank_size = m.at("conv_bank_size").get<int>();
    c.conv_bank_channels = m.at("conv_bank_channels").get<int>();
    c.conv_proj_dim = m.at("conv_proj_dim").get<int>();
    c.num_highway_layers = m.at("num_highway_layers").get<int>();
    c.enc_lstm_dim = m.at("enc_lstm_dim").get<int>();
    c.stem_channels = m.at("stem_channels").get<int>();
    const auto &rc = m.at("resnet_channels");
    if (!rc.is_array() || rc.size() != 4) {
      throw FormatError(path + ": resnet_channels must be a 4-element array");
    }
    for (int i = 0; i < 4; ++i) c.resnet_channels[i] = rc.at(i).get<int>();
    c.visual_dim = m.at("visual_dim").get<int>();
    c.spk_dim = m.at("spk_dim").get<int>();
    c.spk_proj_dim = m.at("spk_proj_dim").get<int>();
    c.tva_heads = m.at("tva_heads").get<int>();
    c.tva_head_dim = m.at("tva_head_dim").get<int>();
    c.tva_out_dim = m.at("tva_out_dim").get<int>();
    c.prenet_dim1 = m.at("prenet_dim1").get<int>();
    c.prenet_dim2 = m.at("prenet_dim2").get<int>();
    c.fusion_dim = m.at("fusion_dim").get<int>();
    c.attn_rnn_dim = m.at("attn_rnn_dim").get<int>();
    c.dec_lstm_dim = m.at("dec_lstm_dim").get<int>();
    c.dec_attn_dim = m.at("dec_attn_dim").get<int>();
    c.num_mels = m.at("num_mels").get<int>();
    c.frames_per_step = m.at("frames_per_step").get<int>();
    c.zoneout_rate = m.at("zoneout_rate").get<double>();
    c.prenet_dropout = m.at("prenet_dropout").get<double>();
    c.bn_momentum = m.at("bn_momentum").get<double>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(path + ": bad model metadata: " + e.what());
  }
  meta.config.Validate();
  return meta;
}

void WriteParamIndex(const std::string &path,
                     const std::vector<std::pair<std::string, std::string>> &entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  for (const auto &[name, file] : entries) {
    os << name << "\t" << file << "\n";
  }
  if (!os) throw IoError("short write to " + path);
}

std::vector<std::pair<std::string, std::string>> ReadParamIndex(
    const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open parameter index " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": expected \"name<TAB>file\"");
    }
    entries.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  if (entries.empty()) throw FormatError(path + ": empty parameter index");
  return entries;
}

}  // namespace visualtts
