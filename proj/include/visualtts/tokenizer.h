// include/visualtts/tokenizer.h

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

#ifndef VISUALTTS_TOKENIZER_H_
#define VISUALTTS_TOKENIZER_H_

#include <string>
#include <vector>

namespace visualtts {

// Character inventory, in id order: 'a'..'z' = 0..25, '0'..'9' = 26..35,
// space = 36, apostrophe = 37, pad = 38, eos = 39.
constexpr int kVocabSize = 40;
constexpr int kPadId = 38;
constexpr int kEosId = 39;

// Maps text to token ids.  Uppercase ASCII is folded to lowercase, characters
// outside the inventory are dropped (including every non-ASCII byte), and a
// single eos id is appended.  Text that is empty after filtering is an error.
std::vector<int> Tokenize(const std::string &text);

// Inverse mapping for a single id; pad and eos render as "<pad>" and "<eos>".
std::string TokenToString(int id);

}  // namespace visualtts

#endif  // VISUALTTS_TOKENIZER_H_
