// speechfeat/spectral.hpp

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

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "speechfeat/audio.hpp"
#include "speechfeat/error.hpp"
#include "speechfeat/features.hpp"
#include "speechfeat/framing.hpp"
#include "speechfeat/mel.hpp"

namespace speechfeat {

struct SpectrogramOptions {
  FrameOptions frame;
  double energy_floor = 0.0;
  bool raw_energy = true;

  friend bool operator==(const SpectrogramOptions&, const SpectrogramOptions&) = default;
};

struct FilterbankOptions {
  FrameOptions frame;
  MelOptions mel;
  bool use_energy = false;
  double energy_floor = 0.0;
  bool raw_energy = true;
  bool use_log_fbank = true;
  bool use_power = true;

  friend bool operator==(const FilterbankOptions&, const FilterbankOptions&) = default;
};

struct MfccOptions {
  FrameOptions frame;
  MelOptions mel;
  int num_ceps = 13;
  bool use_energy = false;
  double energy_floor = 0.0;
  bool raw_energy = true;
  double cepstral_lifter = 22.0;

  friend bool operator==(const MfccOptions&, const MfccOptions&) = default;
};

struct PlpOptions {
  FrameOptions frame;
  MelOptions mel;
  bool rasta = false;
  int lpc_order = 12;
  int num_ceps = 13;
  bool use_energy = false;
  double energy_floor = 0.0;
  bool raw_energy = true;
  double compress_factor = 1.0 / 3.0;
  double cepstral_lifter = 22.0;
  double cepstral_scale = 1.0;

  friend bool operator==(const PlpOptions&, const PlpOptions&) = default;
};

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, SpectrogramOptions>
void visit_fields(Opts& o, Visitor&& v) {
  visit_fields(o.frame, v);
  v("energy_floor", o.energy_floor);
  v("raw_energy", o.raw_energy);
}

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, FilterbankOptions>
void visit_fields(Opts& o, Visitor&& v) {
  visit_fields(o.frame, v);
  visit_fields(o.mel, v);
  v("use_energy", o.use_energy);
  v("energy_floor", o.energy_floor);
  v("raw_energy", o.raw_energy);
  v("use_log_fbank", o.use_log_fbank);
  v("use_power", o.use_power);
}

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, MfccOptions>
void visit_fields(Opts& o, Visitor&& v) {
  visit_fields(o.frame, v);
  visit_fields(o.mel, v);
  v("num_ceps", o.num_ceps);
  v("use_energy", o.use_energy);
  v("energy_floor", o.energy_floor);
  v("raw_energy", o.raw_energy);
  v("cepstral_lifter", o.cepstral_lifter);
}

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, PlpOptions>
void visit_fields(Opts& o, Visitor&& v) {
  visit_fields(o.frame, v);
  visit_fields(o.mel, v);
  v("rasta", o.rasta);
  v("lpc_order", o.lpc_order);
  v("num_ceps", o.num_ceps);
  v("use_energy", o.use_energy);
  v("energy_floor", o.energy_floor);
  v("raw_energy", o.raw_energy);
  v("compress_factor", o.compress_factor);
  v("cepstral_lifter", o.cepstral_lifter);
  v("cepstral_scale", o.cepstral_scale);
}

namespace detail {

struct JsonFieldWriter {
  Properties& out;
  template <class T>
  void operator()(const char* name, const T& value) const {
    if constexpr (std::is_enum_v<T>)
      out[name] = to_string(value);
    else
      out[name] = value;
  }
};

}  // namespace detail

/// Properties attached to the output of a processor.
template <class Opts>
Properties processor_properties(const std::string& name, const Opts& opts) {
  Properties params = Properties::object();
  visit_fields(opts, detail::JsonFieldWriter{params});
  return Properties{{"processor", name}, {"parameters", params}};
}

/// Orthonormal DCT-II basis, rows 0..num_ceps-1 over num_bins inputs.
inline Matrix dct_matrix(int num_ceps, int num_bins) {
  Matrix d(num_ceps, num_bins);
  for (int k = 0; k < num_ceps; ++k) {
    const double norm = k == 0 ? std::sqrt(1.0 / num_bins) : std::sqrt(2.0 / num_bins);
    for (int j = 0; j < num_bins; ++j)
      d(k, j) = norm * std::cos(std::numbers::pi * k * (j + 0.5) / num_bins);
  }
  return d;
}

/// c_i <- c_i * (1 + Q/2 sin(pi i / Q)); all ones when Q == 0.
inline Vector lifter_coefficients(int num_ceps, double lifter) {
  Vector c = Vector::Ones(num_ceps);
  if (lifter != 0.0)
    for (int i = 0; i < num_ceps; ++i)
      c(i) = 1.0 + 0.5 * lifter * std::sin(std::numbers::pi * i / lifter);
  return c;
}

struct LpcResult {
  std::vector<double> coefficients;  // a_1..a_p with x[n] ~ sum_k a_k x[n-k]
  double error = 0.0;                // final prediction error
};

/// Levinson-Durbin recursion on autocorrelation lags r_0..r_p.
inline LpcResult levinson_durbin(std::span<const double> autocorr) {
  if (autocorr.size() < 2) throw InvalidArgument("LPC needs at least two autocorrelation lags");
  const std::size_t order = autocorr.size() - 1;
  LpcResult res;
  res.coefficients.assign(order, 0.0);
  double err = autocorr[0];
  if (!(err > 0.0)) throw NumericError("LPC: zero-lag autocorrelation is not positive");
  std::vector<double> prev(order, 0.0);
  auto& a = res.coefficients;
  for (std::size_t i = 0; i < order; ++i) {
    double acc = autocorr[i + 1];
    for (std::size_t j = 0; j < i; ++j) acc -= a[j] * autocorr[i - j];
    const double k = acc / err;
    prev = a;
    a[i] = k;
    for (std::size_t j = 0; j < i; ++j) a[j] = prev[j] - k * prev[i - 1 - j];
    err *= 1.0 - k * k;
    if (!(err > 0.0)) throw NumericError("LPC: prediction error became non-positive");
  }
  res.error = err;
  return res;
}

/// Cepstrum c_1..c_n of the all-pole model 1 / (1 - sum a_k z^-k).
inline std::vector<double> lpc_to_cepstrum(std::span<const double> a, int n) {
  std::vector<double> c(static_cast<std::size_t>(n), 0.0);
  const int p = static_cast<int>(a.size());
  for (int m = 1; m <= n; ++m) {
    double acc = m <= p ? a[static_cast<std::size_t>(m - 1)] : 0.0;
    for (int k = std::max(1, m - p); k < m; ++k)
      acc += static_cast<double>(k) / m * c[static_cast<std::size_t>(k - 1)] *
             a[static_cast<std::size_t>(m - k - 1)];
    c[static_cast<std::size_t>(m - 1)] = acc;
  }
  return c;
}

/// RASTA band-pass along time: H(z) = 0.1 (2 + z^-1 - z^-3 - 2 z^-4) / (1 - 0.94 z^-1).
/// The first four outputs are zero and the recursion starts from a zero state
/// at the fourth frame.
inline std::vector<double> rasta_filter(std::span<const double> x) {
  static constexpr double kNumer[5] = {0.2, 0.1, 0.0, -0.1, -0.2};
  static constexpr double kPole = 0.94;
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t t = 4; t < x.size(); ++t) {
    double acc = kPole * y[t - 1];
    for (std::size_t k = 0; k < 5; ++k) acc += kNumer[k] * x[t - k];
    y[t] = acc;
  }
  return y;
}

/// Equal-loudness pre-emphasis of PLP at frequency f (Hz).
inline double equal_loudness(double f) {
  const double fsq = f * f;
  const double r = fsq / (fsq + 1.6e5);
  return r * r * (fsq + 1.44e6) / (fsq + 9.61e6);
}

namespace detail {

struct Spectra {
  Matrix power;                    // [m, nfft/2 + 1]
  std::vector<double> log_energy;  // per frame, energy_floor applied
  std::vector<double> times;
};

inline Spectra compute_spectra(const Audio& audio, const FrameOptions& frame, double energy_floor,
                               bool raw_energy, std::uint64_t seed) {
  Frames fr = extract_frames(audio, frame, seed);
  if (fr.frames.rows() == 0)
    throw InvalidArgument("signal of " + std::to_string(audio.size()) +
                          " samples is shorter than one frame");
  Spectra s;
  s.power = power_spectrum(fr.frames, frame.padded_window_size());
  s.log_energy = std::move(fr.log_energy);
  if (!raw_energy)
    for (Eigen::Index i = 0; i < fr.frames.rows(); ++i)
      s.log_energy[static_cast<std::size_t>(i)] =
          std::log(std::max(fr.frames.row(i).squaredNorm(), kLogFloor));
  if (energy_floor > 0.0)
    for (double& e : s.log_energy) e = std::max(e, std::log(energy_floor));
  s.times = std::move(fr.times);
  return s;
}

inline Matrix mel_energies(const Matrix& power, const MelBanks& banks, bool use_power) {
  Matrix out(power.rows(), static_cast<Eigen::Index>(banks.bins.size()));
  for (Eigen::Index i = 0; i < power.rows(); ++i) {
    if (use_power) {
      banks.apply(power.row(i), out.row(i).data());
    } else {
      const Eigen::RowVectorXd mag = power.row(i).array().sqrt();
      banks.apply(mag, out.row(i).data());
    }
  }
  return out;
}

inline Matrix floored_log(const Matrix& x) { return x.array().max(kLogFloor).log(); }

}  // namespace detail

/// Column 0 holds the log energy, columns 1..nfft/2 the log power spectrum.
inline Features spectrogram(const Audio& audio, const SpectrogramOptions& opts,
                            std::uint64_t seed = 0) {
  auto s = detail::compute_spectra(audio, opts.frame, opts.energy_floor, opts.raw_energy, seed);
  Matrix data = detail::floored_log(s.power);
  for (Eigen::Index i = 0; i < data.rows(); ++i) data(i, 0) = s.log_energy[static_cast<std::size_t>(i)];
  return Features(std::move(data), center_times(s.times),
                  processor_properties("spectrogram", opts));
}

inline Features filterbank(const Audio& audio, const FilterbankOptions& opts, double vtln_warp = 1.0,
                           std::uint64_t seed = 0) {
  const auto banks = cached_mel_banks(opts.mel, opts.frame.sample_rate,
                                      opts.frame.padded_window_size(), vtln_warp);
  auto s = detail::compute_spectra(audio, opts.frame, opts.energy_floor, opts.raw_energy, seed);
  Matrix fb = detail::mel_energies(s.power, *banks, opts.use_power);
  if (opts.use_log_fbank) fb = detail::floored_log(fb);
  Matrix data = fb;
  if (opts.use_energy) {
    data.resize(fb.rows(), fb.cols() + 1);
    data.rightCols(fb.cols()) = fb;
    for (Eigen::Index i = 0; i < data.rows(); ++i) data(i, 0) = s.log_energy[static_cast<std::size_t>(i)];
  }
  auto props = processor_properties("filterbank", opts);
  props["vtln_warp"] = vtln_warp;
  return Features(std::move(data), center_times(s.times), std::move(props));
}

inline Features mfcc(const Audio& audio, const MfccOptions& opts, double vtln_warp = 1.0,
                     std::uint64_t seed = 0) {
  if (opts.num_ceps < 1 || opts.num_ceps > opts.mel.num_bins)
    throw InvalidArgument("num_ceps must lie in [1, num_bins]");
  const auto banks = cached_mel_banks(opts.mel, opts.frame.sample_rate,
                                      opts.frame.padded_window_size(), vtln_warp);
  auto s = detail::compute_spectra(audio, opts.frame, opts.energy_floor, opts.raw_energy, seed);
  const Matrix log_mel = detail::floored_log(detail::mel_energies(s.power, *banks, true));
  const Matrix dct = dct_matrix(opts.num_ceps, opts.mel.num_bins);
  Matrix data = log_mel * dct.transpose();
  data.array().rowwise() *= lifter_coefficients(opts.num_ceps, opts.cepstral_lifter).transpose().array();
  if (opts.use_energy)
    for (Eigen::Index i = 0; i < data.rows(); ++i) data(i, 0) = s.log_energy[static_cast<std::size_t>(i)];
  auto props = processor_properties("mfcc", opts);
  props["vtln_warp"] = vtln_warp;
  return Features(std::move(data), center_times(s.times), std::move(props));
}

/// PLP cepstra: mel energies, equal loudness, optional RASTA (log domain),
/// cube-root compression, all-pole modelling, cepstral recursion. Column 0 is
/// the log residual energy of the all-pole fit (or the signal energy with
/// use_energy).
inline Features plp(const Audio& audio, const PlpOptions& opts, double vtln_warp = 1.0,
                    std::uint64_t seed = 0) {
  if (opts.lpc_order < 1) throw InvalidArgument("lpc_order must be at least 1");
  if (opts.num_ceps < 1 || opts.num_ceps > opts.lpc_order + 1)
    throw InvalidArgument("num_ceps must lie in [1, lpc_order + 1]");
  const auto banks = cached_mel_banks(opts.mel, opts.frame.sample_rate,
                                      opts.frame.padded_window_size(), vtln_warp);
  auto s = detail::compute_spectra(audio, opts.frame, opts.energy_floor, opts.raw_energy, seed);
  Matrix mel_e = detail::mel_energies(s.power, *banks, true);
  const Eigen::Index m = mel_e.rows();
  const int nb = opts.mel.num_bins;

  for (int b = 0; b < nb; ++b) mel_e.col(b) *= equal_loudness(banks->center_freqs[static_cast<std::size_t>(b)]);
  if (opts.rasta) {
    for (int b = 0; b < nb; ++b) {
      std::vector<double> logs(static_cast<std::size_t>(m));
      for (Eigen::Index t = 0; t < m; ++t) logs[static_cast<std::size_t>(t)] = std::log(std::max(mel_e(t, b), kLogFloor));
      const auto filtered = rasta_filter(logs);
      for (Eigen::Index t = 0; t < m; ++t) mel_e(t, b) = std::exp(filtered[static_cast<std::size_t>(t)]);
    }
  }
  mel_e = mel_e.array().pow(opts.compress_factor);

  // Inverse cosine transform of the edge-duplicated spectrum gives the
  // autocorrelation lags 0..lpc_order.
  const int dim = nb + 2;
  Matrix idft(opts.lpc_order + 1, dim);
  const double angle = std::numbers::pi / (dim - 1), scale = 1.0 / (2.0 * (dim - 1));
  for (int i = 0; i <= opts.lpc_order; ++i) {
    idft(i, 0) = scale;
    for (int j = 1; j < dim - 1; ++j) idft(i, j) = 2.0 * scale * std::cos(angle * i * j);
    idft(i, dim - 1) = scale * std::cos(angle * i * (dim - 1));
  }

  const Vector lifter = lifter_coefficients(opts.num_ceps, opts.cepstral_lifter);
  Matrix data(m, opts.num_ceps);
  Vector spec(dim);
  for (Eigen::Index t = 0; t < m; ++t) {
    spec.segment(1, nb) = mel_e.row(t).transpose();
    spec(0) = spec(1);
    spec(dim - 1) = spec(dim - 2);
    const Vector autocorr = idft * spec;
    LpcResult lpc;
    try {
      lpc = levinson_durbin(std::span<const double>(autocorr.data(), static_cast<std::size_t>(autocorr.size())));
    } catch (const NumericError& e) {
      throw NumericError("PLP frame " + std::to_string(t) + ": " + e.what());
    }
    const auto cep = lpc_to_cepstrum(lpc.coefficients, opts.num_ceps - 1);
    data(t, 0) = std::log(lpc.error);
    for (int i = 1; i < opts.num_ceps; ++i) data(t, i) = cep[static_cast<std::size_t>(i - 1)];
  }
  data.array().rowwise() *= lifter.transpose().array();
  data *= opts.cepstral_scale;
  if (opts.use_energy)
    for (Eigen::Index t = 0; t < m; ++t) data(t, 0) = s.log_energy[static_cast<std::size_t>(t)];
  auto props = processor_properties("plp", opts);
  props["vtln_warp"] = vtln_warp;
  return Features(std::move(data), center_times(s.times), std::move(props));
}

}  // namespace speechfeat
