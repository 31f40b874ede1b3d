// src/vocoder.cc

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

#include "visualtts/vocoder.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/SVD>
#include <fftw3.h>

namespace visualtts {

namespace {

constexpr double kPi = 3.14159265358979323846;

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

VecXd HannWindow() {
  VecXd w(kWinSamples);
  for (int n = 0; n < kWinSamples; ++n) {
    w[n] = 0.5 * (1.0 - std::cos(2.0 * kPi * n / kWinSamples));
  }
  return w;
}

}  // namespace

MatXd MelFilterbank() {
  const double nyquist = kSampleRate / 2.0;
  const double mel_max = HzToMel(nyquist);
  // 82 edge frequencies give 80 triangles.
  VecXd edges(kNumMels + 2);
  for (int i = 0; i < kNumMels + 2; ++i) {
    edges[i] = MelToHz(mel_max * i / (kNumMels + 1));
  }

  MatXd fb = MatXd::Zero(kNumMels, kFftBins);
  const double bin_hz = static_cast<double>(kSampleRate) / kWinSamples;
  for (int m = 0; m < kNumMels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < kFftBins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f < center) {
        w = (f - lo) / (center - lo);
      } else if (f >= center && f < hi) {
        w = (hi - f) / (hi - center);
      }
      fb(m, k) = w;
    }
  }
  return fb;
}

MatXd MelToLinear(const MatXd &mel, const MatXd &filterbank) {
  if (mel.cols() != filterbank.rows()) {
    throw ValidationError("mel has " + std::to_string(mel.cols()) +
                          " bands but filterbank has " +
                          std::to_string(filterbank.rows()) + " filters");
  }
  CheckFinite(mel, "mel input");

  Eigen::JacobiSVD<MatXd> svd(filterbank, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecXd &sv = svd.singularValues();
  const double tol = std::numeric_limits<double>::epsilon() *
                     static_cast<double>(std::max(filterbank.rows(), filterbank.cols())) *
                     sv[0];
  VecXd inv_sv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    inv_sv[i] = sv[i] > tol ? 1.0 / sv[i] : 0.0;
  }
  // pinv(fb) = V diag(1/s) U^T, shape bins x filters.
  const MatXd pinv = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();

  MatXd linear = mel * pinv.transpose();
  return linear.cwiseMax(0.0);
}

struct Stft::Impl {
  VecXd window = HannWindow();
  double *real_buf = nullptr;
  fftw_complex *complex_buf = nullptr;
  fftw_plan forward_plan = nullptr;
  fftw_plan inverse_plan = nullptr;

  Impl() {
    real_buf = fftw_alloc_real(kWinSamples);
    complex_buf = fftw_alloc_complex(kFftBins);
    // FFTW_ESTIMATE picks the plan deterministically, which keeps repeated
    // runs bit-identical; measured plans can vary between processes.
    forward_plan =
        fftw_plan_dft_r2c_1d(kWinSamples, real_buf, complex_buf, FFTW_ESTIMATE);
    inverse_plan =
        fftw_plan_dft_c2r_1d(kWinSamples, complex_buf, real_buf, FFTW_ESTIMATE);
    if (forward_plan == nullptr || inverse_plan == nullptr) {
      throw NumericError("FFTW plan creation failed");
    }
  }

  ~Impl() {
    if (forward_plan != nullptr) fftw_destroy_plan(forward_plan);
    if (inverse_plan != nullptr) fftw_destroy_plan(inverse_plan);
    fftw_free(real_buf);
    fftw_free(complex_buf);
  }
};

Stft::Stft() : impl_(new Impl) {}
Stft::~Stft() { delete impl_; }

MatXcd Stft::Forward(const VecXd &wave) {
  if (wave.size() < kWinSamples) {
    throw ValidationError("waveform shorter than one analysis window (" +
                          std::to_string(wave.size()) + " < " +
                          std::to_string(kWinSamples) + " samples)");
  }
  CheckFinite(wave, "waveform");
  const Eigen::Index num_frames = (wave.size() - kWinSamples) / kHopSamples + 1;
  MatXcd frames(num_frames, kFftBins);
  for (Eigen::Index t = 0; t < num_frames; ++t) {
    for (int n = 0; n < kWinSamples; ++n) {
      impl_->real_buf[n] = wave[t * kHopSamples + n] * impl_->window[n];
    }
    fftw_execute(impl_->forward_plan);
    for (int k = 0; k < kFftBins; ++k) {
      frames(t, k) =
          std::complex<double>(impl_->complex_buf[k][0], impl_->complex_buf[k][1]);
    }
  }
  return frames;
}

VecXd Stft::Inverse(const MatXcd &frames) {
  if (frames.rows() == 0 || frames.cols() != kFftBins) {
    throw ValidationError("spectrogram must be T x " + std::to_string(kFftBins));
  }
  const Eigen::Index num_samples =
      (frames.rows() - 1) * kHopSamples + kWinSamples;
  VecXd wave = VecXd::Zero(num_samples);
  VecXd norm = VecXd::Zero(num_samples);
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (int k = 0; k < kFftBins; ++k) {
      impl_->complex_buf[k][0] = frames(t, k).real();
      impl_->complex_buf[k][1] = frames(t, k).imag();
    }
    fftw_execute(impl_->inverse_plan);
    const Eigen::Index base = t * kHopSamples;
    for (int n = 0; n < kWinSamples; ++n) {
      // FFTW's c2r transform is unnormalized, hence the 1/N.
      const double sample = impl_->real_buf[n] / kWinSamples;
      wave[base + n] += sample * impl_->window[n];
      norm[base + n] += impl_->window[n] * impl_->window[n];
    }
  }
  for (Eigen::Index i = 0; i < num_samples; ++i) {
    wave[i] = norm[i] > 1e-12 ? wave[i] / norm[i] : 0.0;
  }
  return wave;
}

MatXd StftMagnitude(const VecXd &wave) {
  Stft stft;
  return stft.Forward(wave).cwiseAbs();
}

VecXd GriffinLim(const MatXd &magnitude, int iterations,
                 std::vector<double> *residuals) {
  if (iterations < 1) throw ValidationError("Griffin-Lim needs at least 1 iteration");
  if (magnitude.rows() == 0 || magnitude.cols() != kFftBins) {
    throw ValidationError("magnitude must be T x " + std::to_string(kFftBins));
  }
  CheckFinite(magnitude, "magnitude");
  if ((magnitude.array() < 0.0).any()) {
    throw ValidationError("magnitude entries must be non-negative");
  }
  if (residuals != nullptr) residuals->clear();

  const double mag_norm = magnitude.norm();
  if (mag_norm < 1e-300) {
    // All-silent input: the phase problem is vacuous.
    if (residuals != nullptr) residuals->assign(static_cast<std::size_t>(iterations), 0.0);
    return VecXd::Zero((magnitude.rows() - 1) * kHopSamples + kWinSamples);
  }

  Stft stft;
  MatXcd spec = magnitude.cast<std::complex<double>>();
  for (int it = 0; it < iterations; ++it) {
    const VecXd wave = stft.Inverse(spec);
    const MatXcd reanalysis = stft.Forward(wave);
    if (residuals != nullptr) {
      residuals->push_back((magnitude - reanalysis.cwiseAbs()).norm() / mag_norm);
    }
    for (Eigen::Index t = 0; t < spec.rows(); ++t) {
      for (int k = 0; k < kFftBins; ++k) {
        const std::complex<double> c = reanalysis(t, k);
        const double a = std::abs(c);
        spec(t, k) = a > 1e-300 ? magnitude(t, k) * (c / a)
                                : std::complex<double>(magnitude(t, k), 0.0);
      }
    }
  }
  VecXd wave = stft.Inverse(spec);
  CheckFiniteNumeric(wave, "Griffin-Lim output");
  return wave;
}

VecXd MelToWave(const MelSpectrogram &mel, int gl_iterations) {
  mel.Validate();
  const MatXd linear = MelToLinear(mel.frames.cast<double>(), MelFilterbank());
  VecXd wave = GriffinLim(linear, gl_iterations);
  const double peak = wave.cwiseAbs().maxCoeff();
  if (peak > 1e-9) wave *= 0.95 / peak;
  return wave;
}

void WriteWavPcm16(const std::filesystem::path &path, const VecXd &samples,
                   int sample_rate) {
  if (samples.size() == 0) throw ValidationError("refusing to write empty waveform");
  if (sample_rate <= 0) throw ValidationError("sample rate must be positive");
  CheckFinite(samples, "waveform");

  const std::uint32_t num_samples = static_cast<std::uint32_t>(samples.size());
  const std::uint32_t data_bytes = num_samples * 2;

  std::string buf;
  buf.reserve(44 + data_bytes);
  auto put_u32 = [&buf](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto put_u16 = [&buf](std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
  };

  buf.append("RIFF");
  put_u32(36 + data_bytes);
  buf.append("WAVE");
  buf.append("fmt ");
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(static_cast<std::uint32_t>(sample_rate));
  put_u32(static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(2);
  put_u16(16);
  buf.append("data");
  put_u32(data_bytes);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const double v = std::clamp(samples[i], -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lrint(v * 32767.0));
    put_u16(static_cast<std::uint16_t>(q));
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("short write to " + path.string());
}

}  // namespace visualtts
