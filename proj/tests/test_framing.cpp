// tests/test_framing.cpp

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

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "signals.hpp"
#include "speechfeat/framing.hpp"
#include "speechfeat/mel.hpp"

namespace sf = speechfeat;

namespace {

sf::FrameOptions plain_framing() {
  sf::FrameOptions o;
  o.dither = 0.0;
  o.preemph_coeff = 0.0;
  o.remove_dc_offset = false;
  o.window_type = sf::WindowType::kRectangular;
  return o;
}

}  // namespace

TEST(Framing, FrameCounts) {
  sf::FrameOptions o;
  EXPECT_EQ(sf::num_frames(16000, o), 98);
  EXPECT_EQ(sf::num_frames(399, o), 0);
  EXPECT_EQ(sf::num_frames(400, o), 1);
  o.snip_edges = false;
  EXPECT_EQ(sf::num_frames(16000, o), 100);
}

TEST(Framing, FrameCountMatchesExtraction) {
  for (long n : {400L, 401L, 559L, 560L, 16000L}) {
    const auto a = testsig::white_noise(static_cast<double>(n) / 16000.0, 16000, 3);
    EXPECT_EQ(sf::extract_frames(a, sf::FrameOptions{}, 0).frames.rows(), sf::num_frames(n, {}));
  }
}

TEST(Framing, WindowValues) {
  const auto povey = sf::window_function(sf::WindowType::kPovey, 400);
  const auto hann = sf::window_function(sf::WindowType::kHanning, 400);
  for (std::size_t n = 0; n < povey.size(); ++n) EXPECT_NEAR(povey[n], std::pow(hann[n], 0.85), 1e-15);
  EXPECT_NEAR(povey.front(), 0.0, 1e-15);
  EXPECT_NEAR(povey.back(), 0.0, 1e-15);
  const auto hamming = sf::window_function(sf::WindowType::kHamming, 5);
  EXPECT_NEAR(hamming[0], 0.08, 1e-15);
  EXPECT_NEAR(hamming[2], 1.0, 1e-15);
  const auto blackman = sf::window_function(sf::WindowType::kBlackman, 5);
  EXPECT_NEAR(blackman[0], 0.0, 1e-15);
  EXPECT_NEAR(blackman[2], 1.0, 1e-15);
  for (double w : sf::window_function(sf::WindowType::kRectangular, 7)) EXPECT_EQ(w, 1.0);
  EXPECT_THROW(sf::window_function(sf::WindowType::kHanning, 1), sf::InvalidArgument);
}

TEST(Framing, VerbatimSlices) {
  const auto a = testsig::white_noise(0.1, 16000, 4);
  const auto fr = sf::extract_frames(a, plain_framing(), 0);
  ASSERT_EQ(fr.frames.rows(), 8);
  for (Eigen::Index i = 0; i < fr.frames.rows(); ++i)
    for (Eigen::Index k = 0; k < 400; ++k)
      ASSERT_EQ(fr.frames(i, k), a.samples()[static_cast<std::size_t>(160 * i + k)] * 32768.0);
  EXPECT_NEAR(fr.times[0], 0.0125, 1e-15);
  EXPECT_NEAR(fr.times[1], 0.0225, 1e-15);
}

TEST(Framing, EdgesMirroredWithoutSnip) {
  auto o = plain_framing();
  o.snip_edges = false;
  const auto a = testsig::white_noise(0.05, 16000, 5);
  const auto fr = sf::extract_frames(a, o, 0);
  // frame 0 starts at 80 - 200 = -120; sample -1 mirrors to 0
  EXPECT_EQ(fr.frames(0, 120), a.samples()[0] * 32768.0);
  EXPECT_EQ(fr.frames(0, 119), a.samples()[0] * 32768.0);
  EXPECT_EQ(fr.frames(0, 118), a.samples()[1] * 32768.0);
  EXPECT_NEAR(fr.times[0], 0.005, 1e-15);
}

TEST(Framing, DitherIsSeeded) {
  const auto a = testsig::tone(300.0, 0.2);
  sf::FrameOptions o;
  const auto x = sf::extract_frames(a, o, 11).frames;
  EXPECT_EQ(x, sf::extract_frames(a, o, 11).frames);
  EXPECT_NE(x, sf::extract_frames(a, o, 12).frames);
}

TEST(Framing, DcRemovalAndEnergy) {
  std::vector<double> x(400, 0.25);
  auto o = plain_framing();
  o.remove_dc_offset = true;
  const auto fr = sf::extract_frames(sf::Audio(x, 16000), o, 0);
  EXPECT_LE(fr.frames.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(fr.log_energy[0], std::log(sf::kLogFloor), 1e-9);
}

TEST(Framing, RateMismatchAndBadOptions) {
  EXPECT_THROW(sf::extract_frames(testsig::tone(100.0, 0.1, 8000), sf::FrameOptions{}, 0), sf::InvalidArgument);
  sf::FrameOptions o;
  o.frame_shift = 0.05;
  EXPECT_THROW(o.validate(), sf::InvalidArgument);
  o = {};
  o.preemph_coeff = 1.5;
  EXPECT_THROW(o.validate(), sf::InvalidArgument);
}

TEST(Framing, PowerSpectrumMatchesNaiveDft) {
  std::mt19937_64 rng(6);
  const sf::Matrix frames = testsig::random_matrix(3, 400, rng);
  const sf::Matrix p = sf::power_spectrum(frames, 512);
  for (Eigen::Index i = 0; i < 3; ++i) {
    std::vector<double> row(frames.row(i).data(), frames.row(i).data() + 400);
    const auto ref = testsig::reference_power(row, 512);
    for (std::size_t k = 0; k < ref.size(); ++k)
      EXPECT_NEAR(p(i, static_cast<Eigen::Index>(k)), ref[k], 1e-9 * (1.0 + ref[k]));
  }
}

TEST(Mel, Scale) {
  EXPECT_NEAR(sf::mel(1000.0), 999.99, 0.01);
  EXPECT_EQ(sf::mel(0.0), 0.0);
  for (double f : {20.0, 440.0, 3000.0, 7999.0}) EXPECT_NEAR(sf::inverse_mel(sf::mel(f)), f, 1e-9);
}

TEST(Mel, WarpIdentityAndMonotonicity) {
  for (double f = 20.0; f <= 8000.0; f += 37.0) EXPECT_NEAR(sf::vtln_warp_freq(f, 1.0, 20, 8000, 100, 7500), f, 1e-9);
  for (double w : {0.85, 0.9, 1.1, 1.15}) {
    EXPECT_NEAR(sf::vtln_warp_freq(20.0, w, 20, 8000, 100, 7500), 20.0, 1e-9);
    EXPECT_NEAR(sf::vtln_warp_freq(8000.0, w, 20, 8000, 100, 7500), 8000.0, 1e-9);
    double prev = -1.0;
    for (double f = 20.0; f <= 8000.0; f += 11.0) {
      const double g = sf::vtln_warp_freq(f, w, 20, 8000, 100, 7500);
      EXPECT_GT(g, prev);
      prev = g;
    }
    EXPECT_NEAR(sf::vtln_warp_freq(2000.0, w, 20, 8000, 100, 7500), 2000.0 / w, 1e-9);
  }
}

TEST(Mel, CentersEquallySpaced) {
  const sf::MelOptions o;
  const auto banks = sf::compute_mel_banks(o, 16000, 512, 1.0);
  ASSERT_EQ(banks.bins.size(), 23u);
  for (int b = 0; b < 23; ++b)
    EXPECT_NEAR(banks.center_freqs[static_cast<std::size_t>(b)], testsig::reference_mel_center(b, 23, 20.0, 8000.0), 1e-6);
  for (int b = 1; b + 1 < 23; ++b) {
    const double d1 = sf::mel(banks.center_freqs[b]) - sf::mel(banks.center_freqs[b - 1]);
    const double d2 = sf::mel(banks.center_freqs[b + 1]) - sf::mel(banks.center_freqs[b]);
    EXPECT_NEAR(d1, d2, 1e-9);
  }
}

TEST(Mel, TriangleWeights) {
  const auto banks = sf::compute_mel_banks(sf::MelOptions{}, 16000, 512, 1.0);
  for (const auto& bin : banks.bins) {
    EXPECT_FALSE(bin.weights.empty());
    for (double w : bin.weights) {
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, 1.0);
    }
  }
}

TEST(Mel, WarpedCentersMoveUp) {
  const sf::MelOptions o;
  const auto base = sf::compute_mel_banks(o, 16000, 512, 1.0);
  const auto warped = sf::compute_mel_banks(o, 16000, 512, 0.9);
  bool differ = false;
  for (std::size_t b = 0; b < base.center_freqs.size(); ++b) {
    if (base.center_freqs[b] > 100.0 * 0.9 && base.center_freqs[b] < 7500.0 * 0.9)
      EXPECT_GE(warped.center_freqs[b], base.center_freqs[b]);
    differ = differ || warped.center_freqs[b] != base.center_freqs[b];
  }
  EXPECT_TRUE(differ);
}

TEST(Mel, Errors) {
  sf::MelOptions o;
  o.num_bins = 2;
  EXPECT_THROW(sf::compute_mel_banks(o, 16000, 512, 1.0), sf::InvalidArgument);
  o = {};
  o.high_freq = 9000.0;
  EXPECT_THROW(sf::compute_mel_banks(o, 16000, 512, 1.0), sf::InvalidArgument);
  o = {};
  o.num_bins = 200;
  EXPECT_THROW(sf::compute_mel_banks(o, 16000, 512, 1.0), sf::InvalidArgument);
  EXPECT_THROW(sf::compute_mel_banks(sf::MelOptions{}, 16000, 500, 1.0), sf::InvalidArgument);
}

TEST(Mel, CacheReturnsSameBanks) {
  const auto a = sf::cached_mel_banks(sf::MelOptions{}, 16000, 512, 1.05);
  const auto b = sf::cached_mel_banks(sf::MelOptions{}, 16000, 512, 1.05);
  EXPECT_EQ(a.get(), b.get());
  EXPECT_EQ(a->center_freqs, sf::compute_mel_banks(sf::MelOptions{}, 16000, 512, 1.05).center_freqs);
}
