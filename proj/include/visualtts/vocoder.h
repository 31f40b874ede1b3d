// include/visualtts/vocoder.h

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

#ifndef VISUALTTS_VOCODER_H_
#define VISUALTTS_VOCODER_H_

#include <complex>
#include <filesystem>
#include <vector>

#include "visualtts/types.h"

namespace visualtts {

using MatXcd = MatX<std::complex<double>>;

// 80 triangular mel filters over the 481 magnitude bins of the 960-point
// transform, HTK mel scale, spanning 0 Hz to Nyquist (12 kHz).  Rows are
// filters, columns are FFT bins.
MatXd MelFilterbank();

// Least-squares inversion of a mel spectrogram (rows are frames) back to
// linear magnitudes via the filterbank pseudoinverse, clipped at zero.
// Because the filterbank has full row rank, filterbank * pinv(filterbank) is
// the identity, so re-analyzing the result reproduces the input mel exactly
// up to the clipping.
MatXd MelToLinear(const MatXd &mel, const MatXd &filterbank);

/// Short-time Fourier transform with a 960-sample periodic Hann window and
/// 240-sample hop, no center padding: frame t covers samples
/// [240 t, 240 t + 960).  Inverse() overlap-adds with the same window and
/// normalizes by the accumulated squared window, which reconstructs every
/// sample exactly except sample 0 (the periodic Hann is zero there).
///
/// Wraps FFTW plans and their work buffers, so instances are not thread-safe
/// and not copyable.
class Stft {
 public:
  Stft();
  ~Stft();
  Stft(const Stft &) = delete;
  Stft &operator=(const Stft &) = delete;

  // wave must hold at least one full window; trailing samples that do not
  // fill a hop are ignored.  Returns T x 481 complex spectra.
  MatXcd Forward(const VecXd &wave);

  // frames is T x 481; returns (T - 1) * 240 + 960 samples.
  VecXd Inverse(const MatXcd &frames);

 private:
  struct Impl;
  Impl *impl_;
};

// Convenience: |STFT(wave)| as a T x 481 matrix.
MatXd StftMagnitude(const VecXd &wave);

// Phase reconstruction from linear magnitudes by the classic alternating
// projection.  Starts from zero phase, runs `iterations` rounds, returns the
// final waveform of length (T - 1) * 240 + 960.  When `residuals` is given
// it receives one relative spectral error ||mag - |STFT(w_k)||_F / ||mag||_F
// per iteration.
VecXd GriffinLim(const MatXd &magnitude, int iterations = 60,
                 std::vector<double> *residuals = nullptr);

// Full chain: mel -> linear magnitudes -> Griffin-Lim -> peak normalize to
// 0.95.  Deterministic for a given input.
VecXd MelToWave(const MelSpectrogram &mel, int gl_iterations = 60);

// 16-bit PCM mono RIFF/WAVE.  Samples are clamped to [-1, 1].
void WriteWavPcm16(const std::filesystem::path &path, const VecXd &samples,
                   int sample_rate = kSampleRate);

}  // namespace visualtts

#endif  // VISUALTTS_VOCODER_H_
