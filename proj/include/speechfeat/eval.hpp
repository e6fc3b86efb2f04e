// speechfeat/eval.hpp

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

// Pitch error metrics, DTW over cosine distances and ABX scoring.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "speechfeat/error.hpp"
#include "speechfeat/features.hpp"
#include "speechfeat/parallel.hpp"

namespace speechfeat {

struct PitchEval {
  std::vector<double> ground_truth;
  std::vector<double> estimates;
  std::vector<bool> mask;  // empty: keep every frame

  /// Mask keeping frames where both truth and estimate are voiced (> 0).
  static PitchEval voiced(std::vector<double> truth, std::vector<double> est) {
    if (truth.size() != est.size()) throw InvalidArgument("pitch tracks differ in length");
    std::vector<bool> mask(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) mask[i] = truth[i] > 0.0 && est[i] > 0.0;
    return {std::move(truth), std::move(est), std::move(mask)};
  }
};

namespace detail {

template <class Fn>
double masked_mean(const PitchEval& e, Fn&& term) {
  if (e.ground_truth.size() != e.estimates.size() ||
      (!e.mask.empty() && e.mask.size() != e.ground_truth.size()))
    throw InvalidArgument("pitch evaluation vectors differ in length");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < e.ground_truth.size(); ++i) {
    if (!e.mask.empty() && !e.mask[i]) continue;
    if (!(e.ground_truth[i] > 0.0)) throw InvalidArgument("ground truth must be positive on kept frames");
    sum += term(e.estimates[i], e.ground_truth[i]);
    ++n;
  }
  if (n == 0) throw InvalidArgument("pitch evaluation mask keeps no frame");
  return sum / static_cast<double>(n);
}

}  // namespace detail

/// Mean absolute error in Hz over kept frames.
inline double mae(const PitchEval& e) {
  return detail::masked_mean(e, [](double est, double truth) { return std::abs(est - truth); });
}

/// Percentage of kept frames deviating by more than 5% from the truth.
inline double ger(const PitchEval& e) {
  return 100.0 * detail::masked_mean(e, [](double est, double truth) {
           return std::abs(est - truth) > 0.05 * truth ? 1.0 : 0.0;
         });
}

/// 1 - cos(a, b); a zero frame costs 0 against a zero frame and 1 otherwise.
inline double cosine_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                              const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return na == 0.0 && nb == 0.0 ? 0.0 : 1.0;
  return std::clamp(1.0 - a.dot(b) / (na * nb), 0.0, 2.0);
}

/// DTW with horizontal, vertical and diagonal unit steps; the cost of the
/// best path divided by its number of cells. Among equal-cost paths the
/// shortest is kept.
inline double dtw_cosine(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("DTW operands have different channel counts");
  if (a.rows() == 0 || b.rows() == 0) throw InvalidArgument("DTW operands must be non-empty");
  const Eigen::Index n = a.rows(), m = b.rows();
  std::vector<double> cost(static_cast<std::size_t>(n * m));
  std::vector<long> len(static_cast<std::size_t>(n * m));
  auto at = [m](Eigen::Index i, Eigen::Index j) { return static_cast<std::size_t>(i * m + j); };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d = cosine_distance(a.row(i), b.row(j));
      if (i == 0 && j == 0) {
        cost[at(i, j)] = d;
        len[at(i, j)] = 1;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      long best_len = 0;
      auto consider = [&](Eigen::Index pi, Eigen::Index pj) {
        if (pi < 0 || pj < 0) return;
        const double c = cost[at(pi, pj)];
        const long l = len[at(pi, pj)];
        if (c < best || (c == best && l < best_len)) {
          best = c;
          best_len = l;
        }
      };
      consider(i - 1, j - 1);
      consider(i - 1, j);
      consider(i, j - 1);
      cost[at(i, j)] = best + d;
      len[at(i, j)] = best_len + 1;
    }
  }
  return std::clamp(cost[at(n - 1, m - 1)] / static_cast<double>(len[at(n - 1, m - 1)]), 0.0, 2.0);
}

inline double dtw_cosine(const Features& a, const Features& b) { return dtw_cosine(a.data(), b.data()); }

struct AbxTriplet {
  Matrix a, b, x;  // x belongs to the category of a
};

/// Error rate in percent: [d(a,x) > d(b,x)] + 0.5 [d(a,x) == d(b,x)], averaged.
inline double abx_score(const std::vector<AbxTriplet>& triplets, int njobs = 1) {
  if (triplets.empty()) throw InvalidArgument("ABX needs at least one triplet");
  std::vector<double> err(triplets.size());
  parallel_for(triplets.size(), njobs, [&](std::size_t i) {
    const auto& t = triplets[i];
    if (t.a.cols() != t.x.cols() || t.b.cols() != t.x.cols())
      throw InvalidArgument("ABX triplet " + std::to_string(i) + " mixes channel counts");
    const double dax = dtw_cosine(t.a, t.x), dbx = dtw_cosine(t.b, t.x);
    err[i] = dax > dbx ? 1.0 : (dax == dbx ? 0.5 : 0.0);
  });
  double sum = 0.0;
  for (double e : err) sum += e;
  return 100.0 * sum / static_cast<double>(err.size());
}

using TripletNames = std::array<std::string, 3>;

/// Lines of `<name_a> <name_b> <name_x>`; blank lines are skipped.
inline std::vector<TripletNames> parse_triplets(std::istream& in) {
  std::vector<TripletNames> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    TripletNames t;
    std::string extra;
    if (!(ss >> t[0])) continue;
    if (!(ss >> t[1] >> t[2]) || (ss >> extra))
      throw FormatError("triplets line " + std::to_string(lineno) + ": expected '<a> <b> <x>'");
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<TripletNames> parse_triplets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read triplets file " + path.string());
  return parse_triplets(in);
}

inline double abx_score(const FeaturesCollection& coll, const std::vector<TripletNames>& names, int njobs = 1) {
  std::vector<AbxTriplet> triplets;
  triplets.reserve(names.size());
  for (const auto& n : names) {
    for (const auto& item : n)
      if (!coll.contains(item)) throw InvalidArgument("ABX item '" + item + "' is not in the features");
    triplets.push_back({coll.at(n[0]).data(), coll.at(n[1]).data(), coll.at(n[2]).data()});
  }
  return abx_score(triplets, njobs);
}

}  // namespace speechfeat
