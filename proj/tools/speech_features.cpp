// tools/speech_features.cpp

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

// Command-line front end: configuration generation, batch extraction and
// evaluation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "speechfeat/speechfeat.hpp"

namespace sf = speechfeat;

namespace {

// Last numeric column of each line; lines without numbers (headers) are skipped.
std::vector<double> read_pitch_track(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sf::IoError("cannot read " + path);
  std::vector<double> track;
  std::string line;
  while (std::getline(in, line)) {
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ss(line);
    std::string field, last;
    while (ss >> field) last = field;
    if (last.empty()) continue;
    auto v = sf::detail::parse_number(last);
    if (!v) {
      if (track.empty()) continue;
      throw sf::FormatError(path + ": non-numeric value '" + last + "'");
    }
    track.push_back(*v);
  }
  return track;
}

int run_config(const std::string& features, const std::string& pitch, bool delta, bool cmvn, bool vtln,
               const std::string& output) {
  if (!pitch.empty() && pitch != "kaldi") throw sf::InvalidArgument("unsupported pitch tracker '" + pitch + "'");
  const auto cfg = sf::default_config(sf::parse_feature_kind(features), !pitch.empty(), delta, cmvn, vtln);
  if (output.empty() || output == "-")
    std::cout << sf::config_to_yaml(cfg);
  else
    sf::save_config(cfg, output);
  return 0;
}

int run_extract(const std::string& config_path, const std::string& utts_path, const std::string& output,
                int njobs, std::optional<std::uint64_t> seed, const std::string& format) {
  auto cfg = sf::load_config(config_path);
  if (seed) cfg.seed = *seed;
  const auto fmt = sf::parse_format(format);
  const auto utts = sf::parse_utterances(std::filesystem::path(utts_path));
  try {
    const auto coll = sf::extract_features(cfg, utts, njobs);
    sf::save_collection(coll, output, fmt);
    std::cerr << "extracted " << coll.size() << " utterance(s) to " << output << "\n";
  } catch (const sf::PipelineError& e) {
    for (const auto& [name, msg] : e.failures()) std::cerr << "error: " << name << ": " << msg << "\n";
    return 1;
  }
  return 0;
}

int run_eval_pitch(const std::string& truth_path, const std::string& est_path) {
  auto eval = sf::PitchEval::voiced(read_pitch_track(truth_path), read_pitch_track(est_path));
  std::printf("MAE: %.6f\nGER: %.6f\n", sf::mae(eval), sf::ger(eval));
  return 0;
}

int run_eval_abx(const std::string& features, const std::string& triplets, const std::string& format, int njobs) {
  const auto coll = sf::load_collection(features, sf::parse_format(format));
  const auto names = sf::parse_triplets(std::filesystem::path(triplets));
  std::printf("ABX error: %.4f%%\n", sf::abx_score(coll, names, njobs));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech features extraction"};
  app.require_subcommand(1);

  std::string features, pitch, output;
  bool delta = false, cmvn = false, vtln = false;
  auto* config = app.add_subcommand("config", "Write a default pipeline configuration");
  config->add_option("features", features, "spectrogram, filterbank, mfcc or plp")->required();
  config->add_option("--pitch", pitch, "Pitch tracker to add (kaldi)");
  config->add_flag("--delta", delta, "Add delta features");
  config->add_flag("--cmvn", cmvn, "Add mean-variance normalization");
  config->add_flag("--vtln", vtln, "Add VTLN");
  config->add_option("-o,--output", output, "Output file (stdout by default)");

  std::string config_path, utts_path, out_path, format = "binary";
  int njobs = 1;
  std::optional<std::uint64_t> seed;
  auto* extract = app.add_subcommand("extract", "Extract features from a list of utterances");
  extract->add_option("--njobs", njobs, "Parallel jobs")->check(CLI::PositiveNumber);
  extract->add_option("--seed", seed, "Override the configured seed");
  extract->add_option("--format", format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}));
  extract->add_option("config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  extract->add_option("utterances", utts_path, "Utterances file")->required()->check(CLI::ExistingFile);
  extract->add_option("output", out_path, "Output file (binary) or directory (csv)")->required();

  auto* eval = app.add_subcommand("eval", "Evaluation metrics");
  eval->require_subcommand(1);
  std::string truth, est;
  auto* eval_pitch = eval->add_subcommand("pitch", "MAE and GER of a pitch track");
  eval_pitch->add_option("truth", truth, "Ground-truth CSV, f0 in the last column")->required();
  eval_pitch->add_option("estimate", est, "Estimated CSV, f0 in the last column")->required();
  std::string abx_features, abx_triplets, abx_format = "binary";
  int abx_jobs = 1;
  auto* eval_abx = eval->add_subcommand("abx", "ABX error rate over a triplet list");
  eval_abx->add_option("features", abx_features, "Features file or directory")->required();
  eval_abx->add_option("triplets", abx_triplets, "Lines of '<a> <b> <x>'")->required();
  eval_abx->add_option("--format", abx_format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}));
  eval_abx->add_option("--njobs", abx_jobs, "Parallel jobs")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*config) return run_config(features, pitch, delta, cmvn, vtln, output);
    if (*extract) return run_extract(config_path, utts_path, out_path, njobs, seed, format);
    if (*eval_pitch) return run_eval_pitch(truth, est);
    if (*eval_abx) return run_eval_abx(abx_features, abx_triplets, abx_format, abx_jobs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
