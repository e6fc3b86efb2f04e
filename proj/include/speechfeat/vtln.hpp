// speechfeat/vtln.hpp

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

// Per-speaker VTLN warp estimation by likelihood grid search under a UBM.

#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "speechfeat/error.hpp"
#include "speechfeat/features.hpp"
#include "speechfeat/gmm.hpp"
#include "speechfeat/parallel.hpp"

namespace speechfeat {

enum class VtlnNormType { kOffset, kNone, kDiag };

inline std::string to_string(VtlnNormType t) {
  switch (t) {
    case VtlnNormType::kOffset: return "offset";
    case VtlnNormType::kNone: return "none";
    case VtlnNormType::kDiag: return "diag";
  }
  return "?";
}

inline VtlnNormType parse_vtln_norm_type(std::string_view s) {
  for (auto t : {VtlnNormType::kOffset, VtlnNormType::kNone, VtlnNormType::kDiag})
    if (to_string(t) == s) return t;
  throw InvalidArgument("unknown VTLN norm_type '" + std::string(s) + "'");
}

struct VtlnOptions {
  UbmOptions ubm;
  int num_iters = 15;
  double min_warp = 0.85;
  double max_warp = 1.15;
  double warp_step = 0.01;
  double logdet_scale = 0.0;
  VtlnNormType norm_type = VtlnNormType::kOffset;

  void validate() const {
    ubm.validate();
    if (num_iters < 0) throw InvalidArgument("VTLN num_iters must be non-negative");
    if (!(min_warp < 1.0 && 1.0 < max_warp && min_warp > 0.0))
      throw InvalidArgument("VTLN needs 0 < min_warp < 1 < max_warp");
    if (!(warp_step > 0.0)) throw InvalidArgument("VTLN warp_step must be positive");
  }

  /// min_warp + k * warp_step for k = 0..round((max_warp - min_warp) / warp_step).
  std::vector<double> warp_grid() const {
    const long steps = std::lround((max_warp - min_warp) / warp_step);
    std::vector<double> grid;
    for (long k = 0; k <= steps; ++k) grid.push_back(min_warp + static_cast<double>(k) * warp_step);
    return grid;
  }

  friend bool operator==(const VtlnOptions&, const VtlnOptions&) = default;
};

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, VtlnOptions>
void visit_fields(Opts& o, Visitor&& v) {
  v("num_iters", o.num_iters);
  v("min_warp", o.min_warp);
  v("max_warp", o.max_warp);
  v("warp_step", o.warp_step);
  v("logdet_scale", o.logdet_scale);
  v("norm_type", o.norm_type);
}

/// Features of one utterance extracted with a given warp factor.
using WarpedExtractor = std::function<Matrix(const std::string& utterance, double warp)>;

/// Index of the best score; ties go to the warp closest to 1, then the smaller.
inline std::size_t select_warp(const std::vector<double>& warps, const std::vector<double>& scores) {
  if (warps.empty() || warps.size() != scores.size()) throw InvalidArgument("warp and score tables differ");
  std::size_t best = 0;
  for (std::size_t k = 1; k < warps.size(); ++k) {
    const double a = scores[k], b = scores[best];
    if (a > b) {
      best = k;
    } else if (a == b) {
      const double da = std::abs(warps[k] - 1.0), db = std::abs(warps[best] - 1.0);
      if (da < db || (da == db && warps[k] < warps[best])) best = k;
    }
  }
  return best;
}

struct VtlnTrace {
  std::vector<std::map<std::string, double>> warps_per_iter;
  // speaker -> scores over the warp grid, for the last iteration
  std::map<std::string, std::vector<double>> last_scores;
};

namespace detail {

struct Moments {
  Eigen::RowVectorXd mean, stddev;
};

inline Moments moments(const Matrix& x) {
  Moments m;
  m.mean = x.colwise().mean();
  m.stddev = (x.rowwise() - m.mean).cwiseAbs2().colwise().mean().cwiseSqrt().cwiseMax(1e-10);
  return m;
}

}  // namespace detail

/// Estimates one warp per speaker. `utt2spk` lists the utterances to use;
/// every speaker must own at least one frame.
inline std::map<std::string, double> estimate_warps(const std::map<std::string, std::string>& utt2spk,
                                                    const WarpedExtractor& extract,
                                                    const VtlnOptions& opts, std::uint64_t seed,
                                                    int njobs = 1, VtlnTrace* trace = nullptr) {
  opts.validate();
  if (utt2spk.empty()) throw InvalidArgument("VTLN needs at least one utterance");
  const auto grid = opts.warp_grid();
  std::size_t unit = 0;
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (std::abs(grid[k] - 1.0) < std::abs(grid[unit] - 1.0)) unit = k;

  std::vector<std::string> utts;
  for (const auto& [u, s] : utt2spk) utts.push_back(u);
  std::map<std::string, std::vector<std::size_t>> spk2idx;
  for (std::size_t i = 0; i < utts.size(); ++i) spk2idx[utt2spk.at(utts[i])].push_back(i);

  // feats[i][k]: utterance i at warp grid[k]
  std::vector<std::vector<Matrix>> feats(utts.size(), std::vector<Matrix>(grid.size()));
  parallel_for(utts.size() * grid.size(), njobs, [&](std::size_t job) {
    const std::size_t i = job / grid.size(), k = job % grid.size();
    feats[i][k] = extract(utts[i], grid[k]);
  });
  for (const auto& [spk, idx] : spk2idx) {
    Eigen::Index frames = 0;
    for (auto i : idx) frames += feats[i][unit].rows();
    if (frames == 0) throw InvalidArgument("VTLN: speaker '" + spk + "' has no frames");
  }

  auto stack = [&](const std::vector<std::size_t>& idx, std::size_t k) {
    Eigen::Index rows = 0;
    for (auto i : idx) rows += feats[i][k].rows();
    Matrix x(rows, feats[idx.front()][k].cols());
    Eigen::Index r = 0;
    for (auto i : idx) {
      x.middleRows(r, feats[i][k].rows()) = feats[i][k];
      r += feats[i][k].rows();
    }
    return x;
  };
  auto training_set = [&](const std::map<std::string, std::size_t>& choice) {
    std::vector<Matrix> parts;
    Eigen::Index rows = 0;
    for (const auto& [spk, idx] : spk2idx) {
      parts.push_back(stack(idx, choice.at(spk)));
      rows += parts.back().rows();
    }
    Matrix x(rows, parts.front().cols());
    Eigen::Index r = 0;
    for (auto& p : parts) {
      x.middleRows(r, p.rows()) = p;
      r += p.rows();
    }
    return x;
  };

  std::map<std::string, std::size_t> choice;
  for (const auto& [spk, idx] : spk2idx) choice[spk] = unit;
  Matrix train = training_set(choice);
  DiagGmm ubm = train_ubm(train, opts.ubm, seed);

  std::vector<std::string> speakers;
  for (const auto& [spk, idx] : spk2idx) speakers.push_back(spk);

  for (int iter = 0; iter < opts.num_iters; ++iter) {
    const auto corpus = detail::moments(train);
    std::vector<std::vector<double>> scores(speakers.size(), std::vector<double>(grid.size()));
    parallel_for(speakers.size() * grid.size(), njobs, [&](std::size_t job) {
      const std::size_t s = job / grid.size(), k = job % grid.size();
      Matrix x = stack(spk2idx.at(speakers[s]), k);
      double extra = 0.0;
      if (opts.norm_type != VtlnNormType::kNone) {
        const auto own = detail::moments(x);
        x.rowwise() -= own.mean;
        if (opts.norm_type == VtlnNormType::kDiag) {
          const Eigen::RowVectorXd ratio = corpus.stddev.cwiseQuotient(own.stddev);
          x.array().rowwise() *= ratio.array();
          extra = opts.logdet_scale * static_cast<double>(x.rows()) * ratio.array().log().sum();
        }
        x.rowwise() += corpus.mean;
      }
      scores[s][k] = ubm.frame_loglikes(x).sum() + extra;
    });

    std::map<std::string, std::size_t> next;
    for (std::size_t s = 0; s < speakers.size(); ++s) next[speakers[s]] = select_warp(grid, scores[s]);
    if (trace) {
      std::map<std::string, double> w;
      for (const auto& [spk, k] : next) w[spk] = grid[k];
      trace->warps_per_iter.push_back(std::move(w));
      for (std::size_t s = 0; s < speakers.size(); ++s) trace->last_scores[speakers[s]] = scores[s];
    }
    const bool converged = next == choice;
    choice = std::move(next);
    if (converged) break;
    train = training_set(choice);
    ubm = train_ubm(train, opts.ubm, seed);
  }

  std::map<std::string, double> out;
  for (const auto& [spk, k] : choice) out[spk] = grid[k];
  return out;
}

inline void save_warps(const std::map<std::string, double>& warps, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write warp file " + path.string());
  for (const auto& [spk, w] : warps) out << spk << ' ' << detail::format_double(w) << '\n';
  if (!out) throw IoError("cannot write warp file " + path.string());
}

inline std::map<std::string, double> load_warps(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read warp file " + path.string());
  std::map<std::string, double> warps;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string spk, value, extra;
    if (!(ss >> spk)) continue;
    if (!(ss >> value) || (ss >> extra))
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected '<speaker> <warp>'");
    const auto w = detail::parse_number(value);
    if (!w || !(*w > 0.0))
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad warp '" + value + "'");
    if (!warps.emplace(spk, *w).second)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": duplicate speaker " + spk);
  }
  return warps;
}

}  // namespace speechfeat
