// src/tokenizer.cc

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

#include "visualtts/tokenizer.h"

#include "visualtts/common.h"

namespace visualtts {

std::vector<int> Tokenize(const std::string &text) {
  std::vector<int> ids;
  ids.reserve(text.size() + 1);
  for (unsigned char c : text) {
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    if (c >= 'a' && c <= 'z') {
      ids.push_back(c - 'a');
    } else if (c >= '0' && c <= '9') {
      ids.push_back(26 + (c - '0'));
    } else if (c == ' ') {
      ids.push_back(36);
    } else if (c == '\'') {
      ids.push_back(37);
    }
    // Everything else, including bytes of multi-byte UTF-8 sequences, is
    // silently dropped.
  }
  if (ids.empty()) {
    throw ValidationError("text \"" + text + "\" is empty after filtering");
  }
  ids.push_back(kEosId);
  return ids;
}

std::string TokenToString(int id) {
  if (id >= 0 && id < 26) return std::string(1, static_cast<char>('a' + id));
  if (id >= 26 && id < 36) return std::string(1, static_cast<char>('0' + id - 26));
  if (id == 36) return " ";
  if (id == 37) return "'";
  if (id == kPadId) return "<pad>";
  if (id == kEosId) return "<eos>";
  throw ValidationError("token id " + std::to_string(id) + " outside vocabulary");
}

}  // namespace visualtts
