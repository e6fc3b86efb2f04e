// speechfeat/postproc.hpp

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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "speechfeat/error.hpp"
#include "speechfeat/features.hpp"

namespace speechfeat {

struct DeltaOptions {
  int order = 2;
  int window = 2;

  void validate() const {
    if (order < 1 || order > 3) throw InvalidArgument("delta order must lie in [1, 3]");
    if (window < 1) throw InvalidArgument("delta window must be at least 1");
  }
  friend bool operator==(const DeltaOptions&, const DeltaOptions&) = default;
};

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, DeltaOptions>
void visit_fields(Opts& o, Visitor&& v) {
  v("order", o.order);
  v("window", o.window);
}

/// d_t = sum_{k=1..W} k (x_{t+k} - x_{t-k}) / (2 sum k^2), edge frames replicated.
inline Matrix delta_matrix(const Matrix& x, int window) {
  const Eigen::Index m = x.rows();
  Matrix d = Matrix::Zero(m, x.cols());
  if (m == 0) return d;
  double denom = 0.0;
  for (int k = 1; k <= window; ++k) denom += 2.0 * k * k;
  for (Eigen::Index t = 0; t < m; ++t) {
    for (int k = 1; k <= window; ++k) {
      const Eigen::Index ahead = std::min<Eigen::Index>(t + k, m - 1);
      const Eigen::Index behind = std::max<Eigen::Index>(t - k, 0);
      d.row(t) += static_cast<double>(k) * (x.row(ahead) - x.row(behind));
    }
  }
  return d / denom;
}

/// Appends `order` successive deltas to the features.
inline Features delta(const Features& f, const DeltaOptions& opts) {
  opts.validate();
  const Eigen::Index n = f.dim();
  Matrix out(f.num_frames(), n * (opts.order + 1));
  out.leftCols(n) = f.data();
  Matrix prev = f.data();
  for (int o = 1; o <= opts.order; ++o) {
    prev = delta_matrix(prev, opts.window);
    out.middleCols(n * o, n) = prev;
  }
  Properties props = f.properties();
  props["delta"] = {{"order", opts.order}, {"window", opts.window}};
  return Features(std::move(out), f.times(), std::move(props));
}

enum class CmvnScope { kFrame, kUtterance, kSpeaker };

inline std::string to_string(CmvnScope s) {
  switch (s) {
    case CmvnScope::kFrame: return "frame";
    case CmvnScope::kUtterance: return "utterance";
    case CmvnScope::kSpeaker: return "speaker";
  }
  return "?";
}

inline CmvnScope parse_cmvn_scope(std::string_view s) {
  for (auto v : {CmvnScope::kFrame, CmvnScope::kUtterance, CmvnScope::kSpeaker})
    if (to_string(v) == s) return v;
  throw InvalidArgument("unknown CMVN scope '" + std::string(s) + "'");
}

struct CmvnOptions {
  CmvnScope by = CmvnScope::kUtterance;
  bool norm_vars = true;

  friend bool operator==(const CmvnOptions&, const CmvnOptions&) = default;
};

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, CmvnOptions>
void visit_fields(Opts& o, Visitor&& v) {
  v("by", o.by);
  v("norm_vars", o.norm_vars);
}

inline constexpr double kCmvnStddevFloor = 1e-10;

/// Per-channel count, mean and sum of squared deviations. Accumulators built
/// on disjoint data can be merged in any order.
class CmvnStats {
 public:
  CmvnStats() = default;
  explicit CmvnStats(Eigen::Index dim) : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)) {}

  void add(const Matrix& x) {
    if (mean_.size() == 0 && count_ == 0) *this = CmvnStats(x.cols());
    if (x.cols() != mean_.size()) throw InvalidArgument("CMVN: feature dimension mismatch");
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      ++count_;
      const Vector delta = x.row(t).transpose() - mean_;
      mean_ += delta / static_cast<double>(count_);
      m2_ += delta.cwiseProduct(x.row(t).transpose() - mean_);
    }
  }

  void merge(const CmvnStats& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    if (other.mean_.size() != mean_.size()) throw InvalidArgument("CMVN: feature dimension mismatch");
    const double na = static_cast<double>(count_), nb = static_cast<double>(other.count_);
    const Vector delta = other.mean_ - mean_;
    mean_ += delta * (nb / (na + nb));
    m2_ += other.m2_ + delta.cwiseProduct(delta) * (na * nb / (na + nb));
    count_ += other.count_;
  }

  long count() const { return count_; }
  const Vector& mean() const { return mean_; }
  Vector variance() const {
    return count_ > 0 ? Vector(m2_ / static_cast<double>(count_)) : Vector(m2_);
  }
  Vector stddev() const { return variance().cwiseMax(0.0).cwiseSqrt().cwiseMax(kCmvnStddevFloor); }

  Matrix apply(const Matrix& x, bool norm_vars) const {
    if (count_ == 0) throw InvalidArgument("CMVN: no statistics accumulated");
    Matrix out = x.rowwise() - mean_.transpose();
    if (norm_vars) out.array().rowwise() /= stddev().transpose().array();
    return out;
  }

 private:
  long count_ = 0;
  Vector mean_;
  Vector m2_;
};

namespace detail {

inline Features with_cmvn(const Features& f, Matrix data, const CmvnOptions& opts) {
  Properties props = f.properties();
  props["cmvn"] = {{"by", to_string(opts.by)}, {"norm_vars", opts.norm_vars}};
  return Features(std::move(data), f.times(), std::move(props));
}

}  // namespace detail

/// Mean (and variance) normalization per frame, utterance or speaker.
/// `speakers` maps item names to speakers and is only read in speaker mode.
inline FeaturesCollection cmvn_apply(const FeaturesCollection& coll,
                                     const std::map<std::string, std::string>& speakers,
                                     const CmvnOptions& opts) {
  FeaturesCollection out;
  switch (opts.by) {
    case CmvnScope::kFrame:
      for (const auto& [name, f] : coll) {
        Matrix x = f.data();
        for (Eigen::Index t = 0; t < x.rows(); ++t) {
          const double mu = x.row(t).mean();
          x.row(t).array() -= mu;
          if (opts.norm_vars) {
            const double sd = std::max(std::sqrt(x.row(t).squaredNorm() / static_cast<double>(x.cols())),
                                       kCmvnStddevFloor);
            x.row(t) /= sd;
          }
        }
        out.insert(name, detail::with_cmvn(f, std::move(x), opts));
      }
      break;
    case CmvnScope::kUtterance:
      for (const auto& [name, f] : coll) {
        CmvnStats st;
        st.add(f.data());
        out.insert(name, detail::with_cmvn(f, st.apply(f.data(), opts.norm_vars), opts));
      }
      break;
    case CmvnScope::kSpeaker: {
      std::map<std::string, CmvnStats> stats;
      for (const auto& [name, f] : coll) {
        auto it = speakers.find(name);
        if (it == speakers.end()) throw InvalidArgument("CMVN: no speaker for utterance '" + name + "'");
        CmvnStats st;
        st.add(f.data());
        stats[it->second].merge(st);
      }
      for (const auto& [name, f] : coll)
        out.insert(name, detail::with_cmvn(
                             f, stats.at(speakers.at(name)).apply(f.data(), opts.norm_vars), opts));
      break;
    }
  }
  return out;
}

struct VadOptions {
  double energy_threshold = 5.0;
  double energy_mean_scale = 0.5;

  friend bool operator==(const VadOptions&, const VadOptions&) = default;
};

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, VadOptions>
void visit_fields(Opts& o, Visitor&& v) {
  v("energy_threshold", o.energy_threshold);
  v("energy_mean_scale", o.energy_mean_scale);
}

/// Frame t is voiced iff e_t > energy_threshold + energy_mean_scale * mean(e).
inline std::vector<bool> vad(std::span<const double> log_energy, const VadOptions& opts) {
  if (log_energy.empty()) throw InvalidArgument("VAD needs at least one frame");
  if (!(opts.energy_mean_scale >= 0.0)) throw InvalidArgument("energy_mean_scale must be non-negative");
  double mean = 0.0;
  for (double e : log_energy) mean += e;
  mean /= static_cast<double>(log_energy.size());
  const double thr = opts.energy_threshold + opts.energy_mean_scale * mean;
  std::vector<bool> out(log_energy.size());
  for (std::size_t t = 0; t < log_energy.size(); ++t) out[t] = log_energy[t] > thr;
  return out;
}

}  // namespace speechfeat
