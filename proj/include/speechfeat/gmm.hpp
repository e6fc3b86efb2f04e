// speechfeat/gmm.hpp

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

// Diagonal-covariance Gaussian mixtures and their EM training as a universal
// background model.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "speechfeat/error.hpp"
#include "speechfeat/features.hpp"

namespace speechfeat {

class DiagGmm {
 public:
  DiagGmm() = default;
  DiagGmm(Vector weights, Matrix means, Matrix vars)
      : weights_(std::move(weights)), means_(std::move(means)), vars_(std::move(vars)) {
    validate();
    precompute();
  }

  Eigen::Index num_gauss() const { return weights_.size(); }
  Eigen::Index dim() const { return means_.cols(); }
  const Vector& weights() const { return weights_; }
  const Matrix& means() const { return means_; }
  const Matrix& vars() const { return vars_; }

  /// log(w_g N(x; mu_g, diag var_g)) for every frame (rows) and component (columns).
  Matrix component_loglikes(const Matrix& x) const {
    if (x.cols() != dim())
      throw InvalidArgument("GMM dimension " + std::to_string(dim()) + " but features have " +
                            std::to_string(x.cols()));
    Matrix out = x.cwiseProduct(x) * inv_vars_.transpose() * -0.5;
    out.noalias() += x * means_invvars_.transpose();
    out.rowwise() += gconsts_.transpose();
    return out;
  }

  /// Per-frame mixture log-likelihoods.
  Vector frame_loglikes(const Matrix& x) const { return log_sum_exp_rows(component_loglikes(x)); }

  double loglike(const Vector& frame) const {
    return frame_loglikes(Matrix(frame.transpose()))(0);
  }

  static Vector log_sum_exp_rows(const Matrix& l) {
    Vector out(l.rows());
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      const double mx = l.row(i).maxCoeff();
      out(i) = std::isinf(mx) ? mx : mx + std::log((l.row(i).array() - mx).exp().sum());
    }
    return out;
  }

  friend bool operator==(const DiagGmm& a, const DiagGmm& b) {
    return a.weights_ == b.weights_ && a.means_ == b.means_ && a.vars_ == b.vars_;
  }

 private:
  void validate() const {
    const Eigen::Index g = weights_.size();
    if (g < 1) throw InvalidArgument("GMM needs at least one component");
    if (means_.rows() != g || vars_.rows() != g || vars_.cols() != means_.cols() || means_.cols() < 1)
      throw InvalidArgument("GMM weights, means and vars have inconsistent shapes");
    if ((weights_.array() < 0.0).any() || std::abs(weights_.sum() - 1.0) > 1e-10)
      throw InvariantError("GMM weights must be non-negative and sum to 1");
    if (!(vars_.array() > 0.0).all() || !vars_.allFinite() || !means_.allFinite())
      throw InvariantError("GMM variances must be positive and parameters finite");
  }

  void precompute() {
    const double d = static_cast<double>(dim());
    inv_vars_ = vars_.cwiseInverse();
    means_invvars_ = means_.cwiseProduct(inv_vars_);
    gconsts_.resize(num_gauss());
    for (Eigen::Index g = 0; g < num_gauss(); ++g) {
      gconsts_(g) = std::log(weights_(g)) -
                    0.5 * (d * std::log(2.0 * std::numbers::pi) + vars_.row(g).array().log().sum() +
                           means_.row(g).dot(means_invvars_.row(g)));
    }
  }

  Vector weights_;
  Matrix means_, vars_;
  Matrix inv_vars_, means_invvars_;
  Vector gconsts_;
};

inline double gmm_loglike(const DiagGmm& gmm, const Vector& frame) { return gmm.loglike(frame); }

struct UbmOptions {
  int num_gauss = 64;
  int num_iters = 4;
  double initial_gauss_proportion = 0.5;
  int num_iters_init = 20;
  long num_frames = 500000;
  double min_gaussian_weight = 1e-4;
  bool remove_low_count_gaussians = false;

  void validate() const {
    if (num_gauss < 1) throw InvalidArgument("num_gauss must be at least 1");
    if (num_iters < 0 || num_iters_init < 0) throw InvalidArgument("EM iteration counts must be non-negative");
    if (!(initial_gauss_proportion > 0.0 && initial_gauss_proportion <= 1.0))
      throw InvalidArgument("initial_gauss_proportion must lie in (0, 1]");
    if (num_frames < 1) throw InvalidArgument("num_frames must be positive");
    if (!(min_gaussian_weight >= 0.0 && min_gaussian_weight < 1.0))
      throw InvalidArgument("min_gaussian_weight must lie in [0, 1)");
  }

  friend bool operator==(const UbmOptions&, const UbmOptions&) = default;
};

template <class Opts, class Visitor>
  requires std::same_as<std::remove_const_t<Opts>, UbmOptions>
void visit_fields(Opts& o, Visitor&& v) {
  v("num_gauss", o.num_gauss);
  v("num_iters", o.num_iters);
  v("initial_gauss_proportion", o.initial_gauss_proportion);
  v("num_iters_init", o.num_iters_init);
  v("num_frames", o.num_frames);
  v("min_gaussian_weight", o.min_gaussian_weight);
  v("remove_low_count_gaussians", o.remove_low_count_gaussians);
}

/// One E-step evaluation: average per-frame log-likelihood of the model
/// before the following M-step.
struct EmTraceEntry {
  int phase = 0;              // 0: initialization on the subsample, 1: full passes
  bool split_before = false;  // components were split since the previous entry
  double avg_loglike = 0.0;
};

inline constexpr double kVarianceFloorRatio = 1e-3;
inline constexpr double kSplitPerturbation = 0.1;

namespace detail {

struct GmmParams {
  Vector weights;
  Matrix means, vars;
};

inline void split_heaviest(GmmParams& p) {
  Eigen::Index g;
  p.weights.maxCoeff(&g);
  const Eigen::Index n = p.weights.size();
  p.weights.conservativeResize(n + 1);
  p.means.conservativeResize(n + 1, Eigen::NoChange);
  p.vars.conservativeResize(n + 1, Eigen::NoChange);
  const Eigen::RowVectorXd offset = kSplitPerturbation * p.vars.row(g).cwiseSqrt();
  p.weights(g) *= 0.5;
  p.weights(n) = p.weights(g);
  p.vars.row(n) = p.vars.row(g);
  p.means.row(n) = p.means.row(g) + offset;
  p.means.row(g) -= offset;
}

// One EM iteration in place; returns the average log-likelihood of the
// parameters it started from.
inline double em_step(GmmParams& p, const Matrix& x, const Eigen::RowVectorXd& var_floor,
                      const UbmOptions& opts) {
  const DiagGmm gmm(p.weights, p.means, p.vars);
  const Matrix comp = gmm.component_loglikes(x);
  const Vector lse = DiagGmm::log_sum_exp_rows(comp);
  const Matrix post = (comp.colwise() - lse).array().exp().matrix();
  const Vector occ = post.colwise().sum().transpose();
  const Matrix sum_x = post.transpose() * x;
  const Matrix sum_xx = post.transpose() * x.cwiseProduct(x);
  const double n = static_cast<double>(x.rows());

  p.weights = occ / n;
  for (Eigen::Index g = 0; g < p.weights.size(); ++g) {
    if (!(occ(g) > 0.0) || p.weights(g) < opts.min_gaussian_weight) continue;
    const Eigen::RowVectorXd mean = sum_x.row(g) / occ(g);
    const Eigen::RowVectorXd var = sum_xx.row(g) / occ(g) - mean.cwiseProduct(mean);
    p.means.row(g) = mean;
    p.vars.row(g) = var.cwiseMax(var_floor);
  }
  if (opts.remove_low_count_gaussians) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index g = 0; g < p.weights.size(); ++g)
      if (p.weights(g) >= opts.min_gaussian_weight) keep.push_back(g);
    if (keep.empty()) throw NumericError("UBM: every component fell below min_gaussian_weight");
    if (static_cast<Eigen::Index>(keep.size()) < p.weights.size()) {
      GmmParams q{Vector(keep.size()), Matrix(keep.size(), x.cols()), Matrix(keep.size(), x.cols())};
      for (std::size_t k = 0; k < keep.size(); ++k) {
        q.weights(static_cast<Eigen::Index>(k)) = p.weights(keep[k]);
        q.means.row(static_cast<Eigen::Index>(k)) = p.means.row(keep[k]);
        q.vars.row(static_cast<Eigen::Index>(k)) = p.vars.row(keep[k]);
      }
      p = std::move(q);
    }
  }
  p.weights /= p.weights.sum();
  return lse.mean();
}

inline double average_loglike(const GmmParams& p, const Matrix& x) {
  return DiagGmm(p.weights, p.means, p.vars).frame_loglikes(x).mean();
}

}  // namespace detail

/// Stacks the frames of a collection in name order.
inline Matrix stack_frames(const FeaturesCollection& coll) {
  Eigen::Index rows = 0, cols = -1;
  for (const auto& [name, f] : coll) {
    if (cols >= 0 && f.dim() != cols) throw InvalidArgument("features have inconsistent dimensions");
    cols = f.dim();
    rows += f.num_frames();
  }
  Matrix x(rows, std::max<Eigen::Index>(cols, 0));
  Eigen::Index r = 0;
  for (const auto& [name, f] : coll) {
    x.middleRows(r, f.num_frames()) = f.data();
    r += f.num_frames();
  }
  return x;
}

/// EM training of a diagonal GMM on the stacked frames of x.
inline DiagGmm train_ubm(const Matrix& x, const UbmOptions& opts, std::uint64_t seed,
                         std::vector<EmTraceEntry>* trace = nullptr) {
  opts.validate();
  const Eigen::Index n = x.rows(), d = x.cols();
  if (n < opts.num_gauss)
    throw InvalidArgument("UBM: " + std::to_string(n) + " frames for " + std::to_string(opts.num_gauss) +
                          " components");
  if (d < 1) throw InvalidArgument("UBM: features have no channels");

  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::RowVectorXd var = (x.rowwise() - mean).cwiseAbs2().colwise().mean();
  if (!(var.array() > 0.0).any()) throw NumericError("UBM: data has zero variance in every channel");
  const Eigen::RowVectorXd var_floor = (kVarianceFloorRatio * var).cwiseMax(1e-10);

  std::mt19937_64 rng(seed);
  Matrix subset;
  if (n > opts.num_frames) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::vector<Eigen::Index> picked;
    std::sample(idx.begin(), idx.end(), std::back_inserter(picked), opts.num_frames, rng);
    subset.resize(static_cast<Eigen::Index>(picked.size()), d);
    for (std::size_t k = 0; k < picked.size(); ++k) subset.row(static_cast<Eigen::Index>(k)) = x.row(picked[k]);
  } else {
    subset = x;
  }

  const int g0 = std::clamp(static_cast<int>(std::lround(opts.initial_gauss_proportion * opts.num_gauss)), 1,
                            opts.num_gauss);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::RowVectorXd sd = var.cwiseMax(var_floor).cwiseSqrt();
  detail::GmmParams p{Vector::Constant(g0, 1.0 / g0), Matrix(g0, d), Matrix(g0, d)};
  for (int g = 0; g < g0; ++g)
    for (Eigen::Index j = 0; j < d; ++j) {
      p.means(g, j) = mean(j) + sd(j) * gauss(rng);
      p.vars(g, j) = std::max(var(j), var_floor(j));
    }

  // Splits happen before EM iterations spread evenly over the first half of
  // the initialization phase.
  const int to_split = opts.num_gauss - g0;
  const int split_iters = std::max(1, opts.num_iters_init / 2);
  auto target_at = [&](int it) {
    if (opts.num_iters_init == 0) return opts.num_gauss;
    return g0 + static_cast<int>((static_cast<long>(to_split) * std::min(it + 1, split_iters) + split_iters - 1) /
                                 split_iters);
  };
  for (int it = 0; it < opts.num_iters_init; ++it) {
    bool split = false;
    while (p.weights.size() < target_at(it)) {
      detail::split_heaviest(p);
      split = true;
    }
    const double ll = detail::em_step(p, subset, var_floor, opts);
    if (trace) trace->push_back({0, split, ll});
  }
  bool split = false;
  while (p.weights.size() < opts.num_gauss && !opts.remove_low_count_gaussians) {
    detail::split_heaviest(p);
    split = true;
  }
  if (opts.num_iters_init > 0 && trace) trace->push_back({0, split, detail::average_loglike(p, subset)});

  for (int it = 0; it < opts.num_iters; ++it) {
    const double ll = detail::em_step(p, x, var_floor, opts);
    if (trace) trace->push_back({1, it == 0 && split && opts.num_iters_init == 0, ll});
  }
  if (trace) trace->push_back({1, false, detail::average_loglike(p, x)});
  return DiagGmm(std::move(p.weights), std::move(p.means), std::move(p.vars));
}

inline DiagGmm train_ubm(const FeaturesCollection& coll, const UbmOptions& opts, std::uint64_t seed,
                         std::vector<EmTraceEntry>* trace = nullptr) {
  return train_ubm(stack_frames(coll), opts, seed, trace);
}

/// Stores the model as items "weights" [G, 1], "means" [G, D] and "vars" [G, D].
inline void save_ubm(const DiagGmm& gmm, const std::filesystem::path& path) {
  Matrix times(gmm.num_gauss(), 1);
  for (Eigen::Index g = 0; g < gmm.num_gauss(); ++g) times(g, 0) = static_cast<double>(g);
  const Properties props{{"model", "diag_gmm"}};
  FeaturesCollection coll;
  coll.insert("weights", Features(Matrix(gmm.weights()), times, props));
  coll.insert("means", Features(gmm.means(), times, props));
  coll.insert("vars", Features(gmm.vars(), times, props));
  save_collection(coll, path, SerializationFormat::kBinary);
}

inline DiagGmm load_ubm(const std::filesystem::path& path) {
  const auto coll = load_collection(path, SerializationFormat::kBinary);
  for (const char* key : {"weights", "means", "vars"})
    if (!coll.contains(key)) throw FormatError("UBM file lacks the '" + std::string(key) + "' item");
  return DiagGmm(Vector(coll.at("weights").data().col(0)), coll.at("means").data(), coll.at("vars").data());
}

}  // namespace speechfeat
