// tests/test_eval.cpp

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

#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "signals.hpp"
#include "speechfeat/eval.hpp"

namespace sf = speechfeat;

namespace {

sf::Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  sf::Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST(PitchMetrics, HandValues) {
  const sf::PitchEval e{{100.0, 200.0}, {110.0, 190.0}, {}};
  EXPECT_DOUBLE_EQ(sf::mae(e), 10.0);
  EXPECT_DOUBLE_EQ(sf::ger(e), 50.0);
  const sf::PitchEval same{{100.0, 150.0}, {100.0, 150.0}, {}};
  EXPECT_EQ(sf::mae(same), 0.0);
  EXPECT_EQ(sf::ger(same), 0.0);
  const sf::PitchEval doubled{{100.0, 150.0, 90.0}, {200.0, 300.0, 180.0}, {}};
  EXPECT_EQ(sf::ger(doubled), 100.0);
}

TEST(PitchMetrics, Mask) {
  const sf::PitchEval all{{100.0, 100.0, 100.0}, {101.0, 102.0, 150.0}, {}};
  const sf::PitchEval masked{{100.0, 100.0, 100.0}, {101.0, 102.0, 150.0}, {true, true, false}};
  EXPECT_LT(sf::mae(masked), sf::mae(all));
  EXPECT_DOUBLE_EQ(sf::mae(masked), 1.5);
  EXPECT_THROW(sf::mae({{100.0}, {100.0}, {false}}), sf::InvalidArgument);
  EXPECT_THROW(sf::ger({{100.0}, {100.0, 1.0}, {}}), sf::InvalidArgument);

  const auto v = sf::PitchEval::voiced({0.0, 120.0, 130.0}, {100.0, 0.0, 131.0});
  EXPECT_EQ(v.mask, (std::vector<bool>{false, false, true}));
  EXPECT_DOUBLE_EQ(sf::mae(v), 1.0);
}

TEST(PitchMetrics, ScaleAndPermutation) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(80.0, 300.0), j(0.8, 1.2);
  std::vector<double> truth(100), est(100);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = u(rng);
    est[i] = truth[i] * j(rng);
  }
  const sf::PitchEval base{truth, est, {}};
  auto t3 = truth, e3 = est;
  for (auto& v : t3) v *= 3.0;
  for (auto& v : e3) v *= 3.0;
  EXPECT_NEAR(sf::mae({t3, e3, {}}), 3.0 * sf::mae(base), 1e-9);
  EXPECT_DOUBLE_EQ(sf::ger({t3, e3, {}}), sf::ger(base));
  std::reverse(truth.begin(), truth.end());
  std::reverse(est.begin(), est.end());
  EXPECT_NEAR(sf::mae({truth, est, {}}), sf::mae(base), 1e-9);
  EXPECT_DOUBLE_EQ(sf::ger({truth, est, {}}), sf::ger(base));
}

TEST(Dtw, IdentityAndOrthogonal) {
  std::mt19937_64 rng(2);
  const auto x = testsig::random_matrix(15, 5, rng);
  EXPECT_NEAR(sf::dtw_cosine(x, x), 0.0, 1e-12);
  EXPECT_NEAR(sf::dtw_cosine(rows({{1, 0}, {1, 0}}), rows({{0, 1}, {0, 1}})), 1.0, 1e-15);
  EXPECT_NEAR(sf::dtw_cosine(rows({{1, 0}}), rows({{-1, 0}})), 2.0, 1e-15);
}

TEST(Dtw, DuplicatedFrames) {
  std::mt19937_64 rng(3);
  const auto x = testsig::random_matrix(10, 4, rng);
  sf::Matrix twice(20, 4);
  for (Eigen::Index i = 0; i < 10; ++i) twice.row(2 * i) = twice.row(2 * i + 1) = x.row(i);
  EXPECT_NEAR(sf::dtw_cosine(x, twice), 0.0, 1e-12);
  // scaled frames are parallel
  EXPECT_NEAR(sf::dtw_cosine(x, 3.0 * x), 0.0, 1e-12);
}

TEST(Dtw, SymmetricAndBounded) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = testsig::random_matrix(3 + trial % 7, 3, rng);
    const auto b = testsig::random_matrix(5 + trial % 4, 3, rng);
    const double d = sf::dtw_cosine(a, b);
    EXPECT_DOUBLE_EQ(d, sf::dtw_cosine(b, a));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 2.0);
  }
}

TEST(Dtw, ZeroFrames) {
  EXPECT_EQ(sf::cosine_distance(Eigen::RowVectorXd::Zero(3), Eigen::RowVectorXd::Zero(3)), 0.0);
  EXPECT_EQ(sf::cosine_distance(Eigen::RowVectorXd::Zero(3), Eigen::RowVectorXd::Ones(3)), 1.0);
  EXPECT_THROW(sf::dtw_cosine(sf::Matrix::Ones(2, 3), sf::Matrix::Ones(2, 4)), sf::InvalidArgument);
  EXPECT_THROW(sf::dtw_cosine(sf::Matrix(0, 3), sf::Matrix::Ones(2, 3)), sf::InvalidArgument);
}

TEST(Abx, SimpleCases) {
  std::mt19937_64 rng(5);
  const auto a = testsig::random_matrix(8, 4, rng), b = testsig::random_matrix(8, 4, rng);
  EXPECT_EQ(sf::abx_score({{a, b, a}}), 0.0);
  EXPECT_EQ(sf::abx_score({{b, a, a}}), 100.0);
  EXPECT_EQ(sf::abx_score({{a, a, b}}), 50.0);
  EXPECT_THROW(sf::abx_score(std::vector<sf::AbxTriplet>{}), sf::InvalidArgument);
}

TEST(Abx, SwapMapsToComplement) {
  std::mt19937_64 rng(6);
  std::vector<sf::AbxTriplet> t, swapped;
  for (int i = 0; i < 60; ++i) {
    sf::AbxTriplet x{testsig::random_matrix(6, 3, rng), testsig::random_matrix(7, 3, rng),
                     testsig::random_matrix(5, 3, rng)};
    if (i % 10 == 0) x.b = x.a;
    t.push_back(x);
    swapped.push_back({x.b, x.a, x.x});
  }
  EXPECT_NEAR(sf::abx_score(swapped), 100.0 - sf::abx_score(t), 1e-9);
}

TEST(Abx, RandomNearChance) {
  std::mt19937_64 rng(7);
  std::vector<sf::AbxTriplet> t;
  for (int i = 0; i < 1000; ++i)
    t.push_back({testsig::random_matrix(5, 4, rng), testsig::random_matrix(5, 4, rng), testsig::random_matrix(5, 4, rng)});
  const double e = sf::abx_score(t, 2);
  EXPECT_NEAR(e, 50.0, 5.0);
  EXPECT_EQ(e, sf::abx_score(t, 1));
}

TEST(Abx, FromCollection) {
  std::mt19937_64 rng(8);
  sf::FeaturesCollection coll;
  coll.insert("a", testsig::random_features(6, 3, rng));
  coll.insert("b", testsig::random_features(6, 3, rng));
  std::istringstream in("a b a\n\nb a b\n");
  const auto names = sf::parse_triplets(in);
  ASSERT_EQ(names.size(), 2u);
  EXPECT_EQ(sf::abx_score(coll, names), 0.0);
  std::istringstream bad("a b\n");
  EXPECT_THROW(sf::parse_triplets(bad), sf::FormatError);
  EXPECT_THROW(sf::abx_score(coll, {{"a", "b", "zz"}}), sf::InvalidArgument);
}
