// tests/signals.hpp

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

// Synthetic signals and independent reference computations shared by the
// unit tests and the acceptance suite. Nothing here calls into the library
// except for the Audio / Features containers.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "speechfeat/audio.hpp"
#include "speechfeat/features.hpp"

namespace testsig {

namespace sf = speechfeat;
constexpr double kPi = std::numbers::pi;

inline std::vector<double> sine(double freq, double seconds, int rate, double amp = 0.5, double phase = 0.0) {
  std::vector<double> x(static_cast<std::size_t>(std::lround(seconds * rate)));
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = amp * std::sin(2.0 * kPi * freq * static_cast<double>(n) / rate + phase);
  return x;
}

inline sf::Audio tone(double freq, double seconds, int rate = 16000, double amp = 0.5) {
  return sf::Audio(sine(freq, seconds, rate, amp), rate);
}

/// f1 for the first half, f2 for the second, with continuous phase.
inline sf::Audio two_tone(double f1, double f2, double seconds, int rate = 16000, double amp = 0.5) {
  const std::size_t n = static_cast<std::size_t>(std::lround(seconds * rate));
  std::vector<double> x(n);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(phase);
    phase += 2.0 * kPi * (i < n / 2 ? f1 : f2) / rate;
  }
  return sf::Audio(std::move(x), rate);
}

inline sf::Audio white_noise(double seconds, int rate, std::uint64_t seed, double stddev = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, stddev);
  std::vector<double> x(static_cast<std::size_t>(std::lround(seconds * rate)));
  for (double& v : x) v = g(rng);
  return sf::Audio(std::move(x), rate);
}

using Formants = std::array<double, 4>;

inline const std::vector<Formants>& vowel_table() {
  static const std::vector<Formants> t = {
      {730, 1090, 2440, 3400},  // a
      {270, 2290, 3010, 3700},  // i
      {300, 870, 2240, 3300},   // u
      {530, 1840, 2480, 3500},  // e
      {570, 840, 2410, 3300},   // o
  };
  return t;
}

/// Pulse train at f0 through a cascade of two-pole formant resonators.
/// formant_scale multiplies every formant frequency and bandwidth.
inline std::vector<double> vowel(double f0, const Formants& formants, double seconds, int rate,
                                 std::mt19937_64& rng, double formant_scale = 1.0) {
  const std::size_t n = static_cast<std::size_t>(std::lround(seconds * rate));
  std::normal_distribution<double> jitter(0.0, 0.01), noise(0.0, 0.02);
  std::vector<double> x(n, 0.0);
  double next = 0.0;
  while (next < static_cast<double>(n)) {
    x[static_cast<std::size_t>(next)] = 1.0;
    next += rate / f0 * (1.0 + jitter(rng));
  }
  for (double& v : x) v += noise(rng);
  static constexpr double kBandwidths[4] = {60.0, 90.0, 120.0, 150.0};
  for (std::size_t k = 0; k < formants.size(); ++k) {
    const double f = formants[k] * formant_scale, bw = kBandwidths[k] * formant_scale;
    if (f >= 0.5 * rate) continue;
    const double r = std::exp(-kPi * bw / rate), theta = 2.0 * kPi * f / rate;
    const double a1 = 2.0 * r * std::cos(theta), a2 = -r * r, gain = 1.0 - r;
    double y1 = 0.0, y2 = 0.0;
    for (double& v : x) {
      const double y = gain * v + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y;
      v = y;
    }
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : x) v *= 0.3 / peak;
  return x;
}

/// An utterance: a sequence of vowels of `segment` seconds each.
inline sf::Audio vowel_utterance(double f0, std::uint64_t seed, double formant_scale = 1.0, int num_vowels = 5,
                                 double segment = 0.2, int rate = 16000) {
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  const auto& table = vowel_table();
  for (int v = 0; v < num_vowels; ++v) {
    const auto& f = table[static_cast<std::size_t>(rng() % table.size())];
    const auto seg = vowel(f0 * (1.0 + 0.05 * std::sin(v)), f, segment, rate, rng, formant_scale);
    out.insert(out.end(), seg.begin(), seg.end());
  }
  return sf::Audio(std::move(out), rate);
}

inline sf::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                                double mean = 0.0, double stddev = 1.0) {
  std::normal_distribution<double> g(mean, stddev);
  sf::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

inline sf::Features random_features(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                                    double mean = 0.0, double stddev = 1.0) {
  sf::Matrix t(rows, 1);
  for (Eigen::Index i = 0; i < rows; ++i) t(i, 0) = 0.0125 + 0.01 * static_cast<double>(i);
  return sf::Features(random_matrix(rows, cols, rng, mean, stddev), t);
}

/// Textbook orthonormal DCT-II of one vector, evaluated term by term.
inline std::vector<double> reference_dct(const std::vector<double>& x, int num_out) {
  const double n = static_cast<double>(x.size());
  std::vector<double> y(static_cast<std::size_t>(num_out));
  for (int k = 0; k < num_out; ++k) {
    long double acc = 0.0L;
    for (std::size_t j = 0; j < x.size(); ++j)
      acc += static_cast<long double>(x[j]) * std::cos(kPi * k * (static_cast<double>(j) + 0.5) / n);
    y[static_cast<std::size_t>(k)] = static_cast<double>(acc) * std::sqrt((k == 0 ? 1.0 : 2.0) / n);
  }
  return y;
}

/// O(N^2) DFT power spectrum |X_k|^2, k = 0..n/2.
inline std::vector<double> reference_power(const std::vector<double>& frame, std::size_t nfft) {
  std::vector<double> p(nfft / 2 + 1);
  for (std::size_t k = 0; k <= nfft / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < frame.size(); ++j)
      acc += frame[j] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * j) / static_cast<double>(nfft));
    p[k] = std::norm(acc);
  }
  return p;
}

/// Mel-scale center frequency of bin b from first principles.
inline double reference_mel_center(int b, int num_bins, double low, double high) {
  auto mel = [](double f) { return 1127.0 * std::log(1.0 + f / 700.0); };
  const double ml = mel(low), mh = mel(high);
  const double m = ml + (b + 1) * (mh - ml) / (num_bins + 1);
  return 700.0 * (std::exp(m / 1127.0) - 1.0);
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("speechfeat-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsig
