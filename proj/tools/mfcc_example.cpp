// tools/mfcc_example.cpp

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

// Minimal library usage: MFCC + pitch of a WAV file (or of a synthetic tone
// when no file is given), printed as text.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "speechfeat/speechfeat.hpp"

namespace sf = speechfeat;

int main(int argc, char** argv) try {
  sf::Audio audio = [&] {
    if (argc > 1) return sf::resample(sf::load_wav(argv[1]), 16000);
    std::vector<double> x(16000);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = 0.3 * std::sin(2.0 * std::numbers::pi * 220.0 * n / 16000.0);
    return sf::Audio(std::move(x), 16000);
  }();

  const sf::Features mfcc = sf::mfcc(audio, sf::MfccOptions{});
  const sf::Features pitch = sf::postprocess_pitch(sf::estimate_pitch(audio, sf::PitchOptions{}), {});
  const sf::Features both = sf::concatenate(mfcc, pitch);

  std::printf("%ld frames x %ld channels\n", static_cast<long>(both.num_frames()), static_cast<long>(both.dim()));
  for (Eigen::Index t = 0; t < both.num_frames(); t += 10) {
    std::printf("%7.3f", both.times()(t, 0));
    for (Eigen::Index c = 0; c < both.dim(); ++c) std::printf(" %8.3f", both.data()(t, c));
    std::printf("\n");
  }
  return 0;
} catch (const std::exception& e) {
  std::fprintf(stderr, "error: %s\n", e.what());
  return 1;
}
