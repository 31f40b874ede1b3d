// src/tensor.cc

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

#include "visualtts/tensor.h"

#include <cstring>
#include <fstream>

namespace visualtts {

namespace {

constexpr char kMagic[4] = {'V', 'T', 'T', 'S'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeFloat32 = 0;
constexpr int kMaxRank = 4;

// All multi-byte fields are little endian.  The build targets x86-64, so the
// in-memory representation already matches and serialization is a straight
// byte copy; the helpers below keep the layout explicit anyway.

void PutU32(std::string *out, std::uint32_t v) {
  char b[4];
  b[0] = static_cast<char>(v & 0xff);
  b[1] = static_cast<char>((v >> 8) & 0xff);
  b[2] = static_cast<char>((v >> 16) & 0xff);
  b[3] = static_cast<char>((v >> 24) & 0xff);
  out->append(b, 4);
}

std::uint32_t GetU32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void NdArray::Validate() const {
  if (rank() < 1 || rank() > kMaxRank) {
    throw ValidationError("tensor rank must be between 1 and 4, got " +
                          std::to_string(rank()));
  }
  std::size_t n = 1;
  for (std::uint32_t d : dims) {
    if (d == 0) throw ValidationError("tensor dims must all be positive");
    n *= d;
  }
  if (n != data.size()) {
    throw ValidationError("tensor payload has " + std::to_string(data.size()) +
                          " values but dims imply " + std::to_string(n));
  }
}

void WriteTensor(const NdArray &tensor, const std::filesystem::path &path) {
  tensor.Validate();
  for (float v : tensor.data) {
    if (!std::isfinite(v)) {
      throw ValidationError("refusing to write non-finite value to " + path.string());
    }
  }

  std::string buf;
  buf.reserve(8 + 4 * tensor.dims.size() + 4 * tensor.data.size());
  buf.append(kMagic, 4);
  buf.push_back(static_cast<char>(kVersion));
  buf.push_back(static_cast<char>(kDtypeFloat32));
  buf.push_back(static_cast<char>(tensor.rank()));
  buf.push_back(0);
  for (std::uint32_t d : tensor.dims) PutU32(&buf, d);

  static_assert(sizeof(float) == 4);
  const std::size_t payload_bytes = 4 * tensor.data.size();
  const std::size_t header_bytes = buf.size();
  buf.resize(header_bytes + payload_bytes);
  if (payload_bytes > 0) {
    std::memcpy(buf.data() + header_bytes, tensor.data.data(), payload_bytes);
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("short write to " + path.string());
}

NdArray ReadTensor(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string() + " for reading");
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (!is.good() && !is.eof()) throw IoError("read failure on " + path.string());

  const auto *p = reinterpret_cast<const unsigned char *>(buf.data());
  const std::size_t size = buf.size();
  if (size < 8) throw FormatError(path.string() + ": file shorter than tensor header");
  if (std::memcmp(p, kMagic, 4) != 0) {
    throw FormatError(path.string() + ": bad magic, not a tensor file");
  }
  if (p[4] != kVersion) {
    throw FormatError(path.string() + ": unsupported tensor version " +
                      std::to_string(static_cast<int>(p[4])));
  }
  if (p[5] != kDtypeFloat32) {
    throw FormatError(path.string() + ": unsupported dtype code " +
                      std::to_string(static_cast<int>(p[5])));
  }
  const int rank = static_cast<int>(p[6]);
  if (rank < 1 || rank > kMaxRank) {
    throw FormatError(path.string() + ": rank " + std::to_string(rank) +
                      " outside supported range 1..4");
  }
  if (p[7] != 0) {
    throw FormatError(path.string() + ": reserved header byte is not zero");
  }

  const std::size_t dims_bytes = 4u * static_cast<std::size_t>(rank);
  if (size < 8 + dims_bytes) throw FormatError(path.string() + ": truncated dims");

  NdArray t;
  t.dims.resize(static_cast<std::size_t>(rank));
  std::size_t n = 1;
  for (int i = 0; i < rank; ++i) {
    t.dims[static_cast<std::size_t>(i)] = GetU32(p + 8 + 4 * i);
    if (t.dims[static_cast<std::size_t>(i)] == 0) {
      throw FormatError(path.string() + ": zero dimension in header");
    }
    n *= t.dims[static_cast<std::size_t>(i)];
  }

  const std::size_t expected = 8 + dims_bytes + 4 * n;
  if (size < expected) {
    throw FormatError(path.string() + ": truncated payload, expected " +
                      std::to_string(expected) + " bytes, got " + std::to_string(size));
  }
  if (size > expected) {
    throw FormatError(path.string() + ": " + std::to_string(size - expected) +
                      " trailing bytes after payload");
  }

  t.data.resize(n);
  if (n > 0) std::memcpy(t.data.data(), p + 8 + dims_bytes, 4 * n);
  return t;
}

}  // namespace visualtts
