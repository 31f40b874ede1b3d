// include/visualtts/common.h

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

#ifndef VISUALTTS_COMMON_H_
#define VISUALTTS_COMMON_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace visualtts {

// Row-major matrices throughout: rows are time steps or batch entries, and
// the binary tensor format is row-major, so keeping Eigen in the same order
// makes file I/O and im2col-style reshapes plain memcpy-compatible.
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatXf = MatX<float>;
using MatXd = MatX<double>;
using VecXf = VecX<float>;
using VecXd = VecX<double>;

// Base class for all errors raised by this library.  Subclasses distinguish
// caller mistakes (bad arguments, malformed files, inconsistent data) from
// numeric failures so the command line tool can map them to exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Invalid argument or configuration supplied by the caller.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string &msg) : Error(msg) {}
};

// Malformed serialized data (tensor files, manifests, checkpoints).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string &msg) : Error(msg) {}
};

// Dataset contents violate a documented invariant (for example a mel length
// that is not four times the video length).
class DataError : public Error {
 public:
  explicit DataError(const std::string &msg) : Error(msg) {}
};

// File system failure: missing file, unwritable directory, short write.
class IoError : public Error {
 public:
  explicit IoError(const std::string &msg) : Error(msg) {}
};

// NaN or Inf showed up where finite values are required, or an iterative
// numeric routine failed to produce a usable result.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string &msg) : Error(msg) {}
};

// SplitMix64 step.  Used to derive independent stream seeds from a base seed
// plus a handful of identifying integers so that per-utterance randomness is
// a pure function of (seed, utterance index) and never of iteration order.
inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t a) {
  return SplitMix64(seed ^ SplitMix64(a));
}

inline std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return MixSeed(MixSeed(seed, a), b);
}

inline std::mt19937 MakeRng(std::uint64_t seed) {
  return std::mt19937(static_cast<std::mt19937::result_type>(SplitMix64(seed) >> 16));
}

template <typename Derived>
bool AllFinite(const Eigen::MatrixBase<Derived> &m) {
  return m.allFinite();
}

template <typename Derived>
void CheckFinite(const Eigen::MatrixBase<Derived> &m, const std::string &what) {
  if (!m.allFinite()) {
    throw ValidationError(what + " contains NaN or Inf");
  }
}

template <typename Derived>
void CheckFiniteNumeric(const Eigen::MatrixBase<Derived> &m, const std::string &what) {
  if (!m.allFinite()) {
    throw NumericError(what + " contains NaN or Inf");
  }
}

}  // namespace visualtts

#endif  // VISUALTTS_COMMON_H_
