// speechfeat/pitch.hpp

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

// NCCF pitch tracker with Viterbi smoothing over a log-spaced lag grid, and
// the post-processing producing (pov, normalized log-pitch, delta log-pitch).

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "speechfeat/audio.hpp"
#include "speechfeat/error.hpp"
#include "speechfeat/features.hpp"
#include "speechfeat/framing.hpp"
#include "speechfeat/postproc.hpp"
#include "speechfeat/spectral.hpp"

namespace speechfeat {

struct PitchOptions {
  int sample_rate = 16000;
  double frame_shift = 0.01;
  double frame_length = 0.025;
  double min_f0 = 50.0;
  double max_f0 = 400.0;
  double soft_min_f0 = 10.0;
  double penalty_factor = 0.1;
  double lowpass_cutoff = 1000.0;
  int resample_freq = 4000;
  double delta_pitch = 0.005;
  double nccf_ballast = 7000.0;

  void validate() const {
    if (sample_rate <= 0) throw InvalidArgument("pitch: sample_rate must be positive");
    if (!(frame_shift > 0.0 && frame_length >= frame_shift))
      throw InvalidArgument("pitch: need 0 < frame_shift <= frame_length");
    if (!(0.0 < min_f0 && min_f0 < max_f0 && max_f0 < lowpass_cutoff &&
          lowpass_cutoff <= 0.5 * resample_freq))
      throw InvalidArgument("pitch: need 0 < min_f0 < max_f0 < lowpass_cutoff <= resample_freq / 2");
    if (lowpass_cutoff > 0.5 * sample_rate)
      throw InvalidArgument("pitch: lowpass_cutoff exceeds the input Nyquist frequency");
    if (!(delta_pitch > 0.0)) throw InvalidArgument("pitch: delta_pitch must be positive");
    if (!(soft_min_f0 >= 0.0 && penalty_factor >= 0.0 && nccf_ballast >= 0.0))
      throw InvalidArgument("pitch: soft_min_f0, penalty_factor and nccf_ballast must be non-negative");
  }

  /// The framing of the original signal that pitch frames line up with.
  FrameOptions framing() const {
    FrameOptions f;
    f.sample_rate = sample_rate;
    f.frame_shift = frame_shift;
    f.frame_length = frame_length;
    f.snip_edges = true;
    return f;
  }

  friend bool operator==(const PitchOptions&, const PitchOptions&) = default;
};

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, PitchOptions>
void visit_fields(Opts& o, Visitor&& v) {
  v("sample_rate", o.sample_rate);
  v("frame_shift", o.frame_shift);
  v("frame_length", o.frame_length);
  v("min_f0", o.min_f0);
  v("max_f0", o.max_f0);
  v("soft_min_f0", o.soft_min_f0);
  v("penalty_factor", o.penalty_factor);
  v("lowpass_cutoff", o.lowpass_cutoff);
  v("resample_freq", o.resample_freq);
  v("delta_pitch", o.delta_pitch);
  v("nccf_ballast", o.nccf_ballast);
}

struct PostPitchOptions {
  double pitch_scale = 2.0;
  double pov_scale = 2.0;
  double delta_pitch_scale = 10.0;
  double delta_pitch_noise_stddev = 0.005;
  int delta_window = 2;
  int delay = 0;

  void validate() const {
    if (delta_window < 1) throw InvalidArgument("delta_window must be at least 1");
    if (delay < 0) throw InvalidArgument("pitch delay must be non-negative");
    if (!(delta_pitch_noise_stddev >= 0.0))
      throw InvalidArgument("delta_pitch_noise_stddev must be non-negative");
  }

  friend bool operator==(const PostPitchOptions&, const PostPitchOptions&) = default;
};

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, PostPitchOptions>
void visit_fields(Opts& o, Visitor&& v) {
  v("pitch_scale", o.pitch_scale);
  v("pov_scale", o.pov_scale);
  v("delta_pitch_scale", o.delta_pitch_scale);
  v("delta_pitch_noise_stddev", o.delta_pitch_noise_stddev);
  v("delta_window", o.delta_window);
  v("delay", o.delay);
}

/// Half-width, in zero crossings, of the filter interpolating the NCCF
/// between integer lags.
inline constexpr double kNccfUpsampleZeros = 5.0;
/// Frames on each side of the log-pitch normalization window.
inline constexpr int kPitchNormContext = 75;

/// Fitted log-odds of voicing given |c|, squashed to a probability.
inline double nccf_to_pov(double c) {
  const double a = std::min(std::abs(c), 1.0);
  const double r = -5.2 + 5.4 * std::exp(7.5 * (a - 1.0)) + 4.8 * a - 2.0 * std::exp(-10.0 * a) +
                   4.2 * std::exp(20.0 * (a - 1.0));
  return 1.0 / (1.0 + std::exp(-r));
}

/// Warped NCCF used as the voicing feature: (1.0001 - c)^0.15 - 1.
inline double nccf_to_pov_feature(double c) {
  c = std::clamp(c, -1.0, 1.0);
  return std::pow(1.0001 - c, 0.15) - 1.0;
}

/// Lags (seconds) from 1/max_f0 in steps of (1 + delta_pitch); 1/min_f0 is
/// appended when the progression stops short of it.
inline std::vector<double> pitch_lag_grid(const PitchOptions& opts) {
  const double min_lag = 1.0 / opts.max_f0, max_lag = 1.0 / opts.min_f0;
  std::vector<double> lags;
  for (double lag = min_lag; lag <= max_lag; lag *= 1.0 + opts.delta_pitch) lags.push_back(lag);
  if (lags.back() < max_lag * (1.0 - 1e-12)) lags.push_back(max_lag);
  return lags;
}

namespace detail {

struct NccfGeometry {
  long window = 0;  // samples of the basic NCCF window at resample_freq
  long shift = 0;
  long first_lag = 0;
  long last_lag = 0;
};

inline NccfGeometry nccf_geometry(const PitchOptions& opts) {
  const double rf = opts.resample_freq;
  const double margin = kNccfUpsampleZeros / (2.0 * rf);
  NccfGeometry g;
  g.window = std::lround(rf * opts.frame_length);
  g.shift = std::lround(rf * opts.frame_shift);
  g.first_lag = static_cast<long>(std::ceil(rf * (1.0 / opts.max_f0 - margin)));
  g.last_lag = static_cast<long>(std::floor(rf * (1.0 / opts.min_f0 + margin)));
  if (rf / opts.min_f0 > static_cast<double>(g.window))
    throw InvalidArgument("pitch: min_f0 of " + std::to_string(opts.min_f0) +
                          " Hz implies a lag longer than the frame length");
  if (g.shift < 1) throw InvalidArgument("pitch: frame_shift is below one resampled sample");
  return g;
}

// Low-pass and decimate to resample_freq. The FIR spans the smallest odd
// number of taps >= 2 resample_freq / lowpass_cutoff.
inline std::vector<double> pitch_downsample(const Audio& audio, const PitchOptions& opts) {
  std::vector<double> x(audio.samples().begin(), audio.samples().end());
  for (double& v : x) v *= kInt16Scale;
  long taps = static_cast<long>(std::ceil(2.0 * opts.resample_freq / opts.lowpass_cutoff));
  if (taps % 2 == 0) ++taps;
  const double half_width = static_cast<double>(taps - 1) / 2.0 / opts.resample_freq;
  const double num_zeros = std::max(1.0, half_width * 2.0 * opts.lowpass_cutoff);
  return Resampler(opts.sample_rate, opts.resample_freq, opts.lowpass_cutoff, num_zeros).resample(x);
}

// Sparse interpolation from integer lags first_lag..last_lag onto `lags`.
struct LagInterpolator {
  std::vector<long> first;
  std::vector<std::vector<double>> weights;

  LagInterpolator(const std::vector<double>& lags, const NccfGeometry& g, double rf) {
    const double cutoff = 0.5 * rf;
    const double ww = kNccfUpsampleZeros / (2.0 * cutoff);
    const long n = g.last_lag - g.first_lag + 1;
    for (double lag : lags) {
      const double t = lag - static_cast<double>(g.first_lag) / rf;
      const long lo = std::max(0L, static_cast<long>(std::ceil((t - ww) * rf)));
      const long hi = std::min(n - 1, static_cast<long>(std::floor((t + ww) * rf)));
      first.push_back(lo);
      std::vector<double> w;
      for (long i = lo; i <= hi; ++i)
        w.push_back(windowed_sinc(static_cast<double>(i) / rf - t, cutoff, kNccfUpsampleZeros) / rf);
      weights.push_back(std::move(w));
    }
  }

  void apply(const std::vector<double>& in, std::vector<double>& out) const {
    out.resize(first.size());
    for (std::size_t k = 0; k < first.size(); ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < weights[k].size(); ++j)
        acc += weights[k][j] * in[static_cast<std::size_t>(first[k]) + j];
      out[k] = acc;
    }
  }
};

}  // namespace detail

/// Per-frame [nccf, f0_hz]. Frames follow the snip-edges framing of the input
/// with the pitch frame shift and length; every frame gets an estimate.
inline Features estimate_pitch(const Audio& audio, const PitchOptions& opts) {
  opts.validate();
  if (audio.sample_rate() != opts.sample_rate)
    throw InvalidArgument("pitch: audio sample rate " + std::to_string(audio.sample_rate()) +
                          " differs from configured " + std::to_string(opts.sample_rate));
  const FrameOptions framing = opts.framing();
  const long m = num_frames(static_cast<long>(audio.size()), framing);
  if (m == 0) throw InvalidArgument("pitch: signal is shorter than one frame");

  const auto g = detail::nccf_geometry(opts);
  const double rf = opts.resample_freq;
  const auto wave = detail::pitch_downsample(audio, opts);
  const long nw = static_cast<long>(wave.size());

  double sum = 0.0, sumsq = 0.0;
  for (double v : wave) {
    sum += v;
    sumsq += v * v;
  }
  const double mean_square = nw > 0 ? sumsq / nw - (sum / nw) * (sum / nw) : 0.0;
  const double ballast = std::pow(mean_square * static_cast<double>(g.window), 2) * opts.nccf_ballast;

  const auto lags = pitch_lag_grid(opts);
  const std::size_t num_states = lags.size();
  const detail::LagInterpolator interp(lags, g, rf);
  const long num_measured = g.last_lag - g.first_lag + 1;
  const long full = g.window + g.last_lag;

  std::vector<double> window(static_cast<std::size_t>(full));
  std::vector<double> nccf_pitch(static_cast<std::size_t>(num_measured));
  std::vector<double> nccf_pov(static_cast<std::size_t>(num_measured));
  std::vector<double> res_pitch, res_pov;
  Matrix pov_resampled(m, static_cast<Eigen::Index>(num_states));

  Matrix transition(static_cast<Eigen::Index>(num_states), static_cast<Eigen::Index>(num_states));
  for (std::size_t i = 0; i < num_states; ++i)
    for (std::size_t j = 0; j < num_states; ++j) {
      const double r = std::log(lags[i] / lags[j]);
      transition(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = opts.penalty_factor * r * r;
    }

  std::vector<double> forward(num_states, 0.0), next(num_states);
  std::vector<std::vector<std::uint32_t>> back(static_cast<std::size_t>(m),
                                               std::vector<std::uint32_t>(num_states));
  for (long f = 0; f < m; ++f) {
    const long start = f * g.shift;
    for (long k = 0; k < full; ++k) {
      const long s = start + k;
      window[static_cast<std::size_t>(k)] = s < nw ? wave[static_cast<std::size_t>(s)] : 0.0;
    }
    double mu = 0.0;
    for (long k = 0; k < g.window; ++k) mu += window[static_cast<std::size_t>(k)];
    mu /= static_cast<double>(g.window);
    for (double& v : window) v -= mu;
    double e1 = 0.0;
    for (long k = 0; k < g.window; ++k) e1 += window[static_cast<std::size_t>(k)] * window[static_cast<std::size_t>(k)];
    for (long lag = g.first_lag; lag <= g.last_lag; ++lag) {
      double inner = 0.0, e2 = 0.0;
      for (long k = 0; k < g.window; ++k) {
        const double b = window[static_cast<std::size_t>(k + lag)];
        inner += window[static_cast<std::size_t>(k)] * b;
        e2 += b * b;
      }
      const double norm = e1 * e2;
      const auto idx = static_cast<std::size_t>(lag - g.first_lag);
      const double d_pitch = std::sqrt(norm + ballast), d_pov = std::sqrt(norm);
      nccf_pitch[idx] = d_pitch != 0.0 ? inner / d_pitch : 0.0;
      nccf_pov[idx] = d_pov != 0.0 ? inner / d_pov : 0.0;
    }
    interp.apply(nccf_pitch, res_pitch);
    interp.apply(nccf_pov, res_pov);
    for (std::size_t i = 0; i < num_states; ++i) pov_resampled(f, static_cast<Eigen::Index>(i)) = res_pov[i];

    auto& bp = back[static_cast<std::size_t>(f)];
    for (std::size_t i = 0; i < num_states; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t arg = 0;
      for (std::size_t j = 0; j < num_states; ++j) {
        const double c = forward[j] + transition(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (c < best) {
          best = c;
          arg = static_cast<std::uint32_t>(j);
        }
      }
      const double phi = res_pitch[i];
      const double local = 1.0 - phi + opts.soft_min_f0 * lags[i] * phi;
      next[i] = best + local;
      bp[i] = arg;
    }
    const double floor = *std::min_element(next.begin(), next.end());
    for (std::size_t i = 0; i < num_states; ++i) forward[i] = next[i] - floor;
  }

  std::size_t state = static_cast<std::size_t>(
      std::min_element(forward.begin(), forward.end()) - forward.begin());
  Matrix data(m, 2);
  for (long f = m - 1; f >= 0; --f) {
    data(f, 0) = std::clamp(pov_resampled(f, static_cast<Eigen::Index>(state)), -1.0, 1.0);
    data(f, 1) = std::clamp(1.0 / lags[state], opts.min_f0, opts.max_f0);
    state = back[static_cast<std::size_t>(f)][state];
  }

  std::vector<double> times(static_cast<std::size_t>(m));
  for (long f = 0; f < m; ++f)
    times[static_cast<std::size_t>(f)] =
        (static_cast<double>(frame_start(f, framing)) + framing.window_size() / 2.0) / opts.sample_rate;
  return Features(std::move(data), center_times(times), processor_properties("pitch", opts));
}

/// Turns raw [nccf, f0] into [pov feature, normalized log-pitch, delta log-pitch].
inline Features postprocess_pitch(const Features& raw, const PostPitchOptions& opts,
                                  std::uint64_t seed = 0) {
  opts.validate();
  if (raw.dim() != 2) throw InvalidArgument("pitch post-processing expects [nccf, f0] columns");
  const Eigen::Index m = raw.num_frames();
  const Matrix& in = raw.data();
  Matrix log_f0(m, 1);
  std::vector<double> pov(static_cast<std::size_t>(m));
  for (Eigen::Index t = 0; t < m; ++t) {
    if (!(in(t, 1) > 0.0)) throw InvalidArgument("pitch post-processing needs positive f0");
    log_f0(t, 0) = std::log(in(t, 1));
    pov[static_cast<std::size_t>(t)] = nccf_to_pov(in(t, 0));
  }

  const Matrix dlog = delta_matrix(log_f0, opts.delta_window);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix out(m, 3);
  for (Eigen::Index t = 0; t < m; ++t) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - kPitchNormContext);
    const Eigen::Index hi = std::min<Eigen::Index>(m, t + kPitchNormContext + 1);
    double wsum = 0.0, wlog = 0.0;
    for (Eigen::Index k = lo; k < hi; ++k) {
      wsum += pov[static_cast<std::size_t>(k)];
      wlog += pov[static_cast<std::size_t>(k)] * log_f0(k, 0);
    }
    const double noise = opts.delta_pitch_noise_stddev > 0.0 ? opts.delta_pitch_noise_stddev * gauss(rng) : 0.0;
    out(t, 0) = opts.pov_scale * nccf_to_pov_feature(in(t, 0));
    out(t, 1) = opts.pitch_scale * (log_f0(t, 0) - wlog / wsum);
    out(t, 2) = opts.delta_pitch_scale * (dlog(t, 0) + noise);
  }
  if (opts.delay > 0) {
    Matrix shifted(m, 3);
    for (Eigen::Index t = 0; t < m; ++t) shifted.row(t) = out.row(std::max<Eigen::Index>(0, t - opts.delay));
    out = std::move(shifted);
  }

  Properties props = processor_properties("pitch_postprocess", opts);
  props["raw"] = raw.properties();
  return Features(std::move(out), raw.times(), std::move(props));
}

}  // namespace speechfeat
