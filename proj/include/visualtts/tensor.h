// include/visualtts/tensor.h

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

#ifndef VISUALTTS_TENSOR_H_
#define VISUALTTS_TENSOR_H_

#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "visualtts/common.h"

namespace visualtts {

/// Dense float32 tensor with explicit shape, stored row-major.
///
/// This is the single on-disk value type of the project: mel spectrograms,
/// lip crops, attention maps and checkpoint parameters all travel through it.
/// The serialized layout is
///
///   bytes 0..3   magic "VTTS"
///   byte  4      format version, currently 1
///   byte  5      dtype code, 0 = float32 little endian
///   byte  6      rank, 1..4
///   byte  7      reserved, must be 0
///   next         rank u32 dims, little endian
///   rest         dims-product float32 payload, row-major
///
/// so the smallest legal file, a rank-1 tensor holding one value, is
/// 8 + 4 + 4 = 16 bytes.  Readers reject bad magic, unknown version or dtype,
/// rank outside 1..4, zero dims, truncated payloads and trailing bytes.
struct NdArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  NdArray() = default;
  NdArray(std::vector<std::uint32_t> shape, std::vector<float> values)
      : dims(std::move(shape)), data(std::move(values)) {}

  int rank() const { return static_cast<int>(dims.size()); }

  std::size_t numel() const {
    std::size_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return dims.empty() ? 0 : n;
  }

  // Shape and payload agree, rank is 1..4, every dim is positive.
  void Validate() const;
};

void WriteTensor(const NdArray &tensor, const std::filesystem::path &path);
NdArray ReadTensor(const std::filesystem::path &path);

// Conversions between the flat container and Eigen matrices.  A rank-2
// NdArray maps to a matrix row for row; a rank-1 NdArray maps to a column
// vector.  Higher ranks are flattened to (dims[0], product of the rest),
// which is the natural "one row per leading index" view used for lip frame
// stacks and attention weight stacks.

template <typename Scalar>
MatX<Scalar> TensorToMatrix(const NdArray &t) {
  t.Validate();
  Eigen::Index rows = 1, cols = 1;
  if (t.rank() == 1) {
    rows = static_cast<Eigen::Index>(t.dims[0]);
  } else {
    rows = static_cast<Eigen::Index>(t.dims[0]);
    cols = static_cast<Eigen::Index>(t.numel() / t.dims[0]);
  }
  if (t.rank() == 1) cols = 1;
  MatX<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<Scalar>(t.data[static_cast<std::size_t>(i)]);
  }
  return m;
}

template <typename Scalar>
NdArray MatrixToTensor(const MatX<Scalar> &m) {
  NdArray t;
  t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.data.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    t.data[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
  }
  return t;
}

template <typename Scalar>
NdArray VectorToTensor(const VecX<Scalar> &v) {
  NdArray t;
  t.dims = {static_cast<std::uint32_t>(v.size())};
  t.data.resize(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    t.data[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
  }
  return t;
}

template <typename Scalar>
VecX<Scalar> TensorToVector(const NdArray &t) {
  t.Validate();
  VecX<Scalar> v(static_cast<Eigen::Index>(t.numel()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = static_cast<Scalar>(t.data[static_cast<std::size_t>(i)]);
  }
  return v;
}

}  // namespace visualtts

#endif  // VISUALTTS_TENSOR_H_
