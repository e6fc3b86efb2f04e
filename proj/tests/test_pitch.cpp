// tests/test_pitch.cpp

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
#include <vector>

#include <gtest/gtest.h>

#include "signals.hpp"
#include "speechfeat/pitch.hpp"

namespace sf = speechfeat;

namespace {

sf::Features raw_pitch(const std::vector<double>& nccf, const std::vector<double>& f0) {
  sf::Matrix d(static_cast<Eigen::Index>(f0.size()), 2);
  std::vector<double> t(f0.size());
  for (std::size_t i = 0; i < f0.size(); ++i) {
    d(static_cast<Eigen::Index>(i), 0) = nccf[i];
    d(static_cast<Eigen::Index>(i), 1) = f0[i];
    t[i] = 0.0125 + 0.01 * static_cast<double>(i);
  }
  return sf::Features(d, sf::center_times(t));
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

TEST(Pov, FormulaValues) {
  EXPECT_NEAR(logit(sf::nccf_to_pov(1.0)), 9.2, 1e-3);
  EXPECT_NEAR(sf::nccf_to_pov(1.0), 0.9999, 1e-4);
  EXPECT_NEAR(logit(sf::nccf_to_pov(0.0)), -7.197, 1e-3);
  EXPECT_NEAR(sf::nccf_to_pov(0.0), 7.5e-4, 1e-5);
  EXPECT_GT(sf::nccf_to_pov(0.9), sf::nccf_to_pov(0.5));
  EXPECT_GT(sf::nccf_to_pov(0.5), sf::nccf_to_pov(0.1));
  EXPECT_EQ(sf::nccf_to_pov(-0.4), sf::nccf_to_pov(0.4));
  EXPECT_EQ(sf::nccf_to_pov(3.0), sf::nccf_to_pov(1.0));
}

TEST(Pov, MonotoneOnFineGrid) {
  double prev = sf::nccf_to_pov(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const double p = sf::nccf_to_pov(i * 1e-3);
    EXPECT_GE(p, prev);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    prev = p;
  }
}

TEST(Pov, FeatureWarping) {
  EXPECT_NEAR(sf::nccf_to_pov_feature(0.0), std::pow(1.0001, 0.15) - 1.0, 1e-14);
  EXPECT_NEAR(sf::nccf_to_pov_feature(1.0), std::pow(1e-4, 0.15) - 1.0, 1e-14);
  for (double c = -1.0; c < 1.0; c += 0.01) EXPECT_GT(sf::nccf_to_pov_feature(c), sf::nccf_to_pov_feature(c + 0.01));
}

TEST(LagGrid, SpacingAndEnds) {
  const sf::PitchOptions o;
  const auto lags = sf::pitch_lag_grid(o);
  EXPECT_DOUBLE_EQ(lags.front(), 1.0 / 400.0);
  EXPECT_DOUBLE_EQ(lags.back(), 1.0 / 50.0);
  for (std::size_t i = 1; i + 1 < lags.size(); ++i) EXPECT_NEAR(lags[i] / lags[i - 1], 1.005, 1e-12);
  EXPECT_LE(lags[lags.size() - 1] / lags[lags.size() - 2], 1.005 + 1e-12);
}

TEST(EstimatePitch, ToneTracked) {
  const auto raw = sf::estimate_pitch(testsig::tone(220.0, 2.0), sf::PitchOptions{});
  EXPECT_EQ(raw.num_frames(), sf::num_frames(32000, sf::PitchOptions{}.framing()));
  EXPECT_EQ(raw.dim(), 2);
  for (Eigen::Index t = 0; t < raw.num_frames(); ++t) {
    EXPECT_NEAR(raw.data()(t, 1), 220.0, 0.05 * 220.0) << "frame " << t;
    EXPECT_GT(raw.data()(t, 0), 0.9) << "frame " << t;
  }
  EXPECT_EQ(raw.properties()["processor"], "pitch");
}

TEST(EstimatePitch, FramesAlignWithSpectralFrames) {
  const auto a = testsig::tone(150.0, 0.73);
  const auto raw = sf::estimate_pitch(a, sf::PitchOptions{});
  const auto fr = sf::extract_frames(a, sf::FrameOptions{}, 0);
  ASSERT_EQ(raw.num_frames(), fr.frames.rows());
  for (Eigen::Index t = 0; t < raw.num_frames(); ++t) EXPECT_NEAR(raw.times()(t, 0), fr.times[static_cast<std::size_t>(t)], 1e-12);
}

TEST(EstimatePitch, DitheredSilenceStaysInRange) {
  const auto noise = testsig::white_noise(1.0, 16000, 21, 0.1 / 32768.0);
  sf::PitchOptions o;
  const auto raw = sf::estimate_pitch(noise, o);
  for (Eigen::Index t = 0; t < raw.num_frames(); ++t) {
    EXPECT_GE(raw.data()(t, 1), o.min_f0);
    EXPECT_LE(raw.data()(t, 1), o.max_f0);
  }
  // single frames can exceed 0.3: the path favours the best lag of the noise
  EXPECT_LT(raw.data().col(0).cwiseAbs().mean(), 0.3);
}

TEST(EstimatePitch, F0RangeOnNoise) {
  sf::PitchOptions o;
  o.min_f0 = 80.0;
  o.max_f0 = 300.0;
  const auto raw = sf::estimate_pitch(testsig::white_noise(0.5, 16000, 22), o);
  EXPECT_GE(raw.data().col(1).minCoeff(), 80.0);
  EXPECT_LE(raw.data().col(1).maxCoeff(), 300.0);
}

TEST(EstimatePitch, Errors) {
  EXPECT_THROW(sf::estimate_pitch(testsig::tone(200.0, 0.02), {}), sf::InvalidArgument);
  sf::PitchOptions o;
  o.min_f0 = 20.0;  // a 50 ms lag does not fit in a 25 ms window
  EXPECT_THROW(sf::estimate_pitch(testsig::tone(200.0, 0.5), o), sf::InvalidArgument);
  o = {};
  o.max_f0 = 1200.0;
  EXPECT_THROW(o.validate(), sf::InvalidArgument);
  EXPECT_THROW(sf::estimate_pitch(testsig::tone(200.0, 0.5, 8000), {}), sf::InvalidArgument);
}

TEST(PostprocessPitch, ConstantF0GivesZeroPitchColumns) {
  sf::PostPitchOptions o;
  o.delta_pitch_noise_stddev = 0.0;
  const auto f = sf::postprocess_pitch(raw_pitch(std::vector<double>(200, 0.8), std::vector<double>(200, 180.0)), o);
  EXPECT_EQ(f.dim(), 3);
  for (Eigen::Index t = 0; t < f.num_frames(); ++t) {
    EXPECT_NEAR(f.data()(t, 1), 0.0, 1e-12);
    EXPECT_EQ(f.data()(t, 2), 0.0);
    EXPECT_NEAR(f.data()(t, 0), 2.0 * sf::nccf_to_pov_feature(0.8), 1e-15);
  }
  EXPECT_EQ(f.properties()["processor"], "pitch_postprocess");
}

TEST(PostprocessPitch, WeightedNormalization) {
  // two frames, equal POV: normalized log-pitch is +-half the log ratio
  sf::PostPitchOptions o;
  o.delta_pitch_noise_stddev = 0.0;
  o.pitch_scale = 1.0;
  const auto f = sf::postprocess_pitch(raw_pitch({0.7, 0.7}, {100.0, 200.0}), o);
  EXPECT_NEAR(f.data()(0, 1), -0.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(f.data()(1, 1), 0.5 * std::log(2.0), 1e-12);
  // a low-confidence frame barely moves the mean
  const auto g = sf::postprocess_pitch(raw_pitch({0.99, 0.0}, {100.0, 200.0}), o);
  EXPECT_NEAR(g.data()(0, 1), 0.0, 1e-3);
}

TEST(PostprocessPitch, DeltaOfRisingPitch) {
  sf::PostPitchOptions o;
  o.delta_pitch_noise_stddev = 0.0;
  o.delta_pitch_scale = 1.0;
  std::vector<double> f0(20);
  for (std::size_t i = 0; i < f0.size(); ++i) f0[i] = 100.0 * std::exp(0.01 * static_cast<double>(i));
  const auto f = sf::postprocess_pitch(raw_pitch(std::vector<double>(20, 0.9), f0), o);
  for (Eigen::Index t = 2; t < 18; ++t) EXPECT_NEAR(f.data()(t, 2), 0.01, 1e-12);
}

TEST(PostprocessPitch, DelayShiftsRows) {
  std::vector<double> nccf(50), f0(50);
  for (std::size_t i = 0; i < 50; ++i) {
    nccf[i] = 0.5 + 0.4 * std::sin(0.3 * static_cast<double>(i));
    f0[i] = 150.0 + 30.0 * std::cos(0.2 * static_cast<double>(i));
  }
  const auto raw = raw_pitch(nccf, f0);
  sf::PostPitchOptions o;
  const auto base = sf::postprocess_pitch(raw, o, 9);
  o.delay = 2;
  const auto late = sf::postprocess_pitch(raw, o, 9);
  ASSERT_EQ(late.num_frames(), base.num_frames());
  for (Eigen::Index t = 2; t < 50; ++t) EXPECT_EQ(late.data().row(t), base.data().row(t - 2));
  EXPECT_EQ(late.data().row(0), base.data().row(0));
  EXPECT_EQ(late.data().row(1), base.data().row(0));
}

TEST(PostprocessPitch, SeededNoise) {
  const auto raw = raw_pitch(std::vector<double>(30, 0.9), std::vector<double>(30, 120.0));
  const sf::PostPitchOptions o;
  EXPECT_EQ(sf::postprocess_pitch(raw, o, 3), sf::postprocess_pitch(raw, o, 3));
  EXPECT_NE(sf::postprocess_pitch(raw, o, 3).data(), sf::postprocess_pitch(raw, o, 4).data());
  sf::PostPitchOptions quiet = o;
  quiet.delta_pitch_noise_stddev = 0.0;
  EXPECT_EQ(sf::postprocess_pitch(raw, quiet, 3).data(), sf::postprocess_pitch(raw, quiet, 4).data());
}

TEST(PostprocessPitch, Errors) {
  sf::PostPitchOptions o;
  o.delay = -1;
  EXPECT_THROW(sf::postprocess_pitch(raw_pitch({0.5}, {100.0}), o), sf::InvalidArgument);
  EXPECT_THROW(sf::postprocess_pitch(raw_pitch({0.5}, {0.0}), {}), sf::InvalidArgument);
}
