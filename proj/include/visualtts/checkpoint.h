// include/visualtts/checkpoint.h

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

#ifndef VISUALTTS_CHECKPOINT_H_
#define VISUALTTS_CHECKPOINT_H_

#include <string>
#include <utility>
#include <vector>

#include "visualtts/config.h"

namespace visualtts {

// A checkpoint directory holds one tensor file per parameter, an index.txt
// with one "name<TAB>relative-path" line per parameter in registration
// order, and a config.json recording the variant and every model width so a
// model can be rebuilt before loading the tensors.

struct ModelMeta {
  ModelVariant variant = ModelVariant::kVisualTts;
  ModelConfig config;
};

void WriteModelMeta(const std::string &path, const ModelMeta &meta);
ModelMeta ReadModelMeta(const std::string &path);

void WriteParamIndex(const std::string &path,
                     const std::vector<std::pair<std::string, std::string>> &entries);
std::vector<std::pair<std::string, std::string>> ReadParamIndex(
    const std::string &path);

}  // namespace visualtts

#endif  // VISUALTTS_CHECKPOINT_H_
