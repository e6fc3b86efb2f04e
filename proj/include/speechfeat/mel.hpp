// speechfeat/mel.hpp

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
#include <concepts>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "speechfeat/error.hpp"
#include "speechfeat/framing.hpp"

namespace speechfeat {

inline double mel(double hz) {
  if (!(hz >= 0.0)) throw InvalidArgument("mel scale needs a non-negative frequency");
  return 1127.0 * std::log1p(hz / 700.0);
}

inline double inverse_mel(double mel_value) { return 700.0 * std::expm1(mel_value / 1127.0); }

struct MelOptions {
  int num_bins = 23;
  double low_freq = 20.0;
  double high_freq = 0.0;    // <= 0: relative to Nyquist
  double vtln_low = 100.0;   // <= 0: relative to Nyquist
  double vtln_high = -500.0; // <= 0: relative to Nyquist

  double effective_high_freq(int sample_rate) const {
    return high_freq > 0.0 ? high_freq : 0.5 * sample_rate + high_freq;
  }
  double effective_vtln_low(int sample_rate) const {
    return vtln_low > 0.0 ? vtln_low : 0.5 * sample_rate + vtln_low;
  }
  double effective_vtln_high(int sample_rate) const {
    return vtln_high > 0.0 ? vtln_high : 0.5 * sample_rate + vtln_high;
  }

  void validate(int sample_rate) const {
    const double nyquist = 0.5 * sample_rate;
    const double high = effective_high_freq(sample_rate);
    if (num_bins < 3) throw InvalidArgument("num_bins must be at least 3");
    if (!(low_freq >= 0.0 && low_freq < high && high <= nyquist))
      throw InvalidArgument("mel bins need 0 <= low_freq < high_freq <= Nyquist");
    if (!(effective_vtln_low(sample_rate) < effective_vtln_high(sample_rate)))
      throw InvalidArgument("vtln_low must be below vtln_high");
  }

  friend bool operator==(const MelOptions&, const MelOptions&) = default;
};

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, MelOptions>
void visit_fields(Opts& o, Visitor&& v) {
  v("num_bins", o.num_bins);
  v("low_freq", o.low_freq);
  v("high_freq", o.high_freq);
  v("vtln_low", o.vtln_low);
  v("vtln_high", o.vtln_high);
}

/// Piecewise-linear VTLN frequency warping. The central segment maps f to
/// f / warp between the inflection points l = vtln_low * max(1, warp) and
/// h = vtln_high * min(1, warp); the outer segments keep low_freq and
/// high_freq fixed. Frequencies outside [low_freq, high_freq] are returned
/// unchanged.
inline double vtln_warp_freq(double freq, double warp, double low_freq, double high_freq,
                             double vtln_low, double vtln_high) {
  const double l = vtln_low * std::max(1.0, warp);
  const double h = vtln_high * std::min(1.0, warp);
  if (!(l < h) || !(low_freq < l) || !(h < high_freq))
    throw InvalidArgument("VTLN inflection points out of order for warp " + std::to_string(warp));
  if (freq < low_freq || freq > high_freq) return freq;
  const double scale = 1.0 / warp;
  if (freq < l) {
    const double fl = scale * l;
    return low_freq + (fl - low_freq) / (l - low_freq) * (freq - low_freq);
  }
  if (freq < h) return scale * freq;
  const double fh = scale * h;
  return high_freq + (high_freq - fh) / (high_freq - h) * (freq - high_freq);
}

struct MelBanks {
  struct Bin {
    long first_index = 0;         // first FFT bin with a weight
    std::vector<double> weights;  // consecutive FFT-bin weights
  };
  std::vector<Bin> bins;
  std::vector<double> center_freqs;  // Hz, after warping

  /// Mel-weighted sums of a spectrum row (length nfft/2 + 1).
  template <class Row>
  void apply(const Row& spectrum, double* out) const {
    for (std::size_t b = 0; b < bins.size(); ++b) {
      double acc = 0.0;
      for (std::size_t k = 0; k < bins[b].weights.size(); ++k)
        acc += bins[b].weights[k] * spectrum(bins[b].first_index + static_cast<long>(k));
      out[b] = acc;
    }
  }
};

/// Triangular filters equally spaced on the mel scale between low_freq and
/// high_freq. With warp != 1 each triangle's edges and center are warped by
/// vtln_warp_freq before conversion to mel.
inline MelBanks compute_mel_banks(const MelOptions& opts, int sample_rate, long nfft, double warp) {
  opts.validate(sample_rate);
  if (nfft < 2 || (nfft & (nfft - 1)) != 0) throw InvalidArgument("nfft must be a power of two");
  const double low = opts.low_freq, high = opts.effective_high_freq(sample_rate);
  const double vlow = opts.effective_vtln_low(sample_rate);
  const double vhigh = opts.effective_vtln_high(sample_rate);
  const double mel_low = mel(low), mel_high = mel(high);
  const double delta = (mel_high - mel_low) / (opts.num_bins + 1);
  const double bin_width = static_cast<double>(sample_rate) / static_cast<double>(nfft);

  auto warped_mel = [&](double m) {
    if (warp == 1.0) return m;
    return mel(vtln_warp_freq(inverse_mel(m), warp, low, high, vlow, vhigh));
  };

  MelBanks banks;
  for (int b = 0; b < opts.num_bins; ++b) {
    const double left = warped_mel(mel_low + b * delta);
    const double center = warped_mel(mel_low + (b + 1) * delta);
    const double right = warped_mel(mel_low + (b + 2) * delta);
    banks.center_freqs.push_back(inverse_mel(center));

    MelBanks::Bin bin;
    bin.first_index = -1;
    for (long k = 0; k <= nfft / 2; ++k) {
      const double m = mel(bin_width * static_cast<double>(k));
      if (m > left && m < right) {
        const double w = m <= center ? (m - left) / (center - left) : (right - m) / (right - center);
        if (bin.first_index < 0) bin.first_index = k;
        bin.weights.resize(static_cast<std::size_t>(k - bin.first_index), 0.0);
        bin.weights.push_back(w);
      }
    }
    if (bin.first_index < 0)
      throw InvalidArgument("mel bin " + std::to_string(b) + " covers no FFT bin; use fewer bins");
    banks.bins.push_back(std::move(bin));
  }
  return banks;
}

/// Process-wide cache of mel banks keyed by (options, rate, nfft, warp).
inline std::shared_ptr<const MelBanks> cached_mel_banks(const MelOptions& opts, int sample_rate,
                                                        long nfft, double warp) {
  using Key = std::tuple<int, double, double, double, double, int, long, double>;
  static std::shared_mutex mutex;
  static std::map<Key, std::shared_ptr<const MelBanks>> cache;
  const Key key{opts.num_bins, opts.low_freq, opts.high_freq, opts.vtln_low, opts.vtln_high,
                sample_rate, nfft, warp};
  {
    std::shared_lock lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto banks = std::make_shared<const MelBanks>(compute_mel_banks(opts, sample_rate, nfft, warp));
  std::unique_lock lock(mutex);
  return cache.try_emplace(key, std::move(banks)).first->second;
}

}  // namespace speechfeat
