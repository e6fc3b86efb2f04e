// speechfeat/framing.hpp

// Copyright 2026  speechfeat authors

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

#pragma once

#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "speechfeat/audio.hpp"
#include "speechfeat/error.hpp"
#include "speechfeat/features.hpp"

namespace speechfeat {

enum class WindowType { kHamming, kHanning, kPovey, kRectangular, kBlackman };

inline std::string to_string(WindowType w) {
  switch (w) {
    case WindowType::kHamming: return "hamming";
    case WindowType::kHanning: return "hanning";
    case WindowType::kPovey: return "povey";
    case WindowType::kRectangular: return "rectangular";
    case WindowType::kBlackman: return "blackman";
  }
  return "?";
}

inline WindowType parse_window_type(std::string_view s) {
  for (auto w : {WindowType::kHamming, WindowType::kHanning, WindowType::kPovey,
                 WindowType::kRectangular, WindowType::kBlackman})
    if (to_string(w) == s) return w;
  throw InvalidArgument("unknown window type '" + std::string(s) + "'");
}

/// Samples are scaled by this before dithering so that dither amplitudes and
/// energies live in the 16-bit integer domain.
inline constexpr double kInt16Scale = 32768.0;

/// log() floor used everywhere a logarithm of a power may be taken.
inline constexpr double kLogFloor = std::numeric_limits<double>::min();

struct FrameOptions {
  int sample_rate = 16000;
  double frame_shift = 0.01;
  double frame_length = 0.025;
  double dither = 0.1;
  double preemph_coeff = 0.97;
  bool remove_dc_offset = true;
  WindowType window_type = WindowType::kPovey;
  bool snip_edges = true;

  long window_size() const { return std::lround(frame_length * sample_rate); }
  long window_shift() const { return std::lround(frame_shift * sample_rate); }

  /// Smallest power of two holding a frame.
  long padded_window_size() const {
    long n = 1;
    while (n < window_size()) n <<= 1;
    return n;
  }

  void validate() const {
    if (sample_rate <= 0) throw InvalidArgument("sample_rate must be positive");
    if (!(frame_shift > 0.0) || frame_shift > frame_length)
      throw InvalidArgument("need 0 < frame_shift <= frame_length");
    if (window_size() < 2) throw InvalidArgument("frame_length covers fewer than 2 samples");
    if (window_shift() < 1) throw InvalidArgument("frame_shift covers no sample");
    if (!(dither >= 0.0)) throw InvalidArgument("dither must be non-negative");
    if (!(preemph_coeff >= 0.0 && preemph_coeff <= 1.0))
      throw InvalidArgument("preemph_coeff must lie in [0, 1]");
  }

  friend bool operator==(const FrameOptions&, const FrameOptions&) = default;
};

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, FrameOptions>
void visit_fields(Opts& o, Visitor&& v) {
  v("sample_rate", o.sample_rate);
  v("frame_shift", o.frame_shift);
  v("frame_length", o.frame_length);
  v("dither", o.dither);
  v("preemph_coeff", o.preemph_coeff);
  v("remove_dc_offset", o.remove_dc_offset);
  v("window_type", o.window_type);
  v("snip_edges", o.snip_edges);
}

/// Number of frames for a signal of num_samples with the given framing.
inline long num_frames(long num_samples, const FrameOptions& opts) {
  const long length = opts.window_size(), shift = opts.window_shift();
  if (opts.snip_edges) return num_samples < length ? 0 : 1 + (num_samples - length) / shift;
  return (num_samples + shift / 2) / shift;
}

/// First sample of frame i (may be negative without snip_edges).
inline long frame_start(long i, const FrameOptions& opts) {
  if (opts.snip_edges) return i * opts.window_shift();
  return i * opts.window_shift() + opts.window_shift() / 2 - opts.window_size() / 2;
}

/// Window of the given type over n in [0, length-1], denominators length-1.
inline std::vector<double> window_function(WindowType type, long length) {
  if (length < 2) throw InvalidArgument("window length must be at least 2");
  std::vector<double> w(static_cast<std::size_t>(length));
  const double a = 2.0 * std::numbers::pi / static_cast<double>(length - 1);
  for (long n = 0; n < length; ++n) {
    const double c = std::cos(a * static_cast<double>(n));
    double v = 1.0;
    switch (type) {
      case WindowType::kHanning: v = 0.5 - 0.5 * c; break;
      case WindowType::kHamming: v = 0.54 - 0.46 * c; break;
      case WindowType::kPovey: v = std::pow(0.5 - 0.5 * c, 0.85); break;
      case WindowType::kRectangular: v = 1.0; break;
      case WindowType::kBlackman: v = 0.42 - 0.5 * c + 0.08 * std::cos(2.0 * a * static_cast<double>(n)); break;
    }
    w[static_cast<std::size_t>(n)] = v;
  }
  return w;
}

struct Frames {
  Matrix frames;                   // [m, window_size], after windowing
  std::vector<double> log_energy;  // raw energy: after dc removal, before pre-emphasis
  std::vector<double> times;       // frame centers in seconds
};

/// Cuts, dithers, centers, pre-emphasizes and windows the frames of a signal.
/// The dither noise comes from a generator seeded with `seed`.
inline Frames extract_frames(const Audio& audio, const FrameOptions& opts, std::uint64_t seed) {
  opts.validate();
  if (audio.sample_rate() != opts.sample_rate)
    throw InvalidArgument("audio sample rate " + std::to_string(audio.sample_rate()) +
                          " differs from framing sample rate " + std::to_string(opts.sample_rate));
  const long n = static_cast<long>(audio.size());
  const long m = num_frames(n, opts);
  const long length = opts.window_size();
  const auto window = window_function(opts.window_type, length);
  auto samples = audio.samples();

  Frames out;
  out.frames.resize(m, length);
  out.log_energy.resize(static_cast<std::size_t>(m));
  out.times.resize(static_cast<std::size_t>(m));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(length));
  for (long i = 0; i < m; ++i) {
    const long start = frame_start(i, opts);
    for (long k = 0; k < length; ++k) {
      long s = start + k;
      // mirror at the edges when frames overrun the signal
      while (s < 0 || s >= n) s = s < 0 ? -s - 1 : 2 * n - 1 - s;
      x[static_cast<std::size_t>(k)] = samples[static_cast<std::size_t>(s)] * kInt16Scale;
    }
    if (opts.dither != 0.0)
      for (double& v : x) v += opts.dither * gauss(rng);
    if (opts.remove_dc_offset) {
      double mean = 0.0;
      for (double v : x) mean += v;
      mean /= static_cast<double>(length);
      for (double& v : x) v -= mean;
    }
    double energy = 0.0;
    for (double v : x) energy += v * v;
    out.log_energy[static_cast<std::size_t>(i)] = std::log(std::max(energy, kLogFloor));
    if (opts.preemph_coeff != 0.0) {
      for (long k = length - 1; k > 0; --k)
        x[static_cast<std::size_t>(k)] -= opts.preemph_coeff * x[static_cast<std::size_t>(k - 1)];
      x[0] -= opts.preemph_coeff * x[0];
    }
    for (long k = 0; k < length; ++k)
      out.frames(i, k) = x[static_cast<std::size_t>(k)] * window[static_cast<std::size_t>(k)];
    out.times[static_cast<std::size_t>(i)] =
        (static_cast<double>(start) + static_cast<double>(length) / 2.0) / opts.sample_rate;
  }
  return out;
}

namespace detail {

// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const auto u = a[i + j], v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace detail

/// |X_k|^2 for k = 0..nfft/2 of each zero-padded frame.
inline Matrix power_spectrum(const Matrix& frames, long nfft) {
  Matrix out(frames.rows(), nfft / 2 + 1);
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(nfft));
  for (Eigen::Index i = 0; i < frames.rows(); ++i) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (Eigen::Index k = 0; k < frames.cols(); ++k) buf[static_cast<std::size_t>(k)] = frames(i, k);
    detail::fft(buf);
    for (long k = 0; k <= nfft / 2; ++k) out(i, k) = std::norm(buf[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace speechfeat
