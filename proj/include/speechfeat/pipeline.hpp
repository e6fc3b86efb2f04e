// speechfeat/pipeline.hpp

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

// Configuration and batch execution of the extraction pipeline:
// raw features -> deltas -> pitch -> CMVN, with optional per-speaker VTLN.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "speechfeat/audio.hpp"
#include "speechfeat/error.hpp"
#include "speechfeat/features.hpp"
#include "speechfeat/parallel.hpp"
#include "speechfeat/pitch.hpp"
#include "speechfeat/postproc.hpp"
#include "speechfeat/spectral.hpp"
#include "speechfeat/vtln.hpp"

namespace speechfeat {

enum class FeatureKind { kSpectrogram, kFilterbank, kMfcc, kPlp };

inline std::string to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::kSpectrogram: return "spectrogram";
    case FeatureKind::kFilterbank: return "filterbank";
    case FeatureKind::kMfcc: return "mfcc";
    case FeatureKind::kPlp: return "plp";
  }
  return "?";
}

inline FeatureKind parse_feature_kind(std::string_view s) {
  for (auto k : {FeatureKind::kSpectrogram, FeatureKind::kFilterbank, FeatureKind::kMfcc, FeatureKind::kPlp})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown features '" + std::string(s) +
                        "'; expected spectrogram, filterbank, mfcc or plp");
}

struct PitchConfig {
  PitchOptions pitch;
  PostPitchOptions postprocessing;

  friend bool operator==(const PitchConfig&, const PitchConfig&) = default;
};

using FeatureOptions = std::variant<SpectrogramOptions, FilterbankOptions, MfccOptions, PlpOptions>;

struct PipelineConfig {
  FeatureOptions features = MfccOptions{};
  std::optional<PitchConfig> pitch;
  std::optional<DeltaOptions> delta;
  std::optional<CmvnOptions> cmvn;
  std::optional<VtlnOptions> vtln;
  std::uint64_t seed = 0;

  FeatureKind kind() const { return static_cast<FeatureKind>(features.index()); }

  const FrameOptions& frame() const {
    return std::visit([](const auto& o) -> const FrameOptions& { return o.frame; }, features);
  }

  void validate() const {
    const FrameOptions& f = frame();
    f.validate();
    std::visit(
        [&](const auto& o) {
          if constexpr (requires { o.mel; }) o.mel.validate(f.sample_rate);
        },
        features);
    if (pitch) {
      pitch->pitch.validate();
      pitch->postprocessing.validate();
      const auto& p = pitch->pitch;
      if (p.sample_rate != f.sample_rate || p.frame_shift != f.frame_shift || p.frame_length != f.frame_length)
        throw InvalidArgument("pitch sample_rate, frame_shift and frame_length must match the features");
      if (!f.snip_edges) throw InvalidArgument("pitch requires snip_edges on the features");
    }
    if (delta) delta->validate();
    if (vtln) {
      if (kind() == FeatureKind::kSpectrogram)
        throw InvalidArgument("VTLN is not available for spectrogram features");
      vtln->validate();
    }
  }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Configuration with default parameters for the selected steps.
inline PipelineConfig default_config(FeatureKind kind, bool with_pitch = false, bool with_delta = false,
                                     bool with_cmvn = false, bool with_vtln = false) {
  if (with_vtln && kind == FeatureKind::kSpectrogram)
    throw InvalidArgument("VTLN is not available for spectrogram features");
  PipelineConfig c;
  switch (kind) {
    case FeatureKind::kSpectrogram: c.features = SpectrogramOptions{}; break;
    case FeatureKind::kFilterbank: c.features = FilterbankOptions{}; break;
    case FeatureKind::kMfcc: c.features = MfccOptions{}; break;
    case FeatureKind::kPlp: c.features = PlpOptions{}; break;
  }
  if (with_pitch) c.pitch = PitchConfig{};
  if (with_delta) c.delta = DeltaOptions{};
  if (with_cmvn) c.cmvn = CmvnOptions{};
  if (with_vtln) c.vtln = VtlnOptions{};
  return c;
}

// ---------------------------------------------------------------------------
// Config file I/O (YAML)

namespace detail {

inline void enum_from_string(std::string_view s, WindowType& out) { out = parse_window_type(s); }
inline void enum_from_string(std::string_view s, CmvnScope& out) { out = parse_cmvn_scope(s); }
inline void enum_from_string(std::string_view s, VtlnNormType& out) { out = parse_vtln_norm_type(s); }

struct YamlWriter {
  YAML::Emitter& out;
  template <class T>
  void operator()(const char* name, const T& value) const {
    out << YAML::Key << name << YAML::Value;
    if constexpr (std::is_enum_v<T>)
      out << to_string(value);
    else if constexpr (std::is_same_v<T, double>)
      out << format_double(value);
    else
      out << value;
  }
};

struct YamlReader {
  const YAML::Node& node;
  std::string section;
  std::set<std::string>* used;

  template <class T>
  void operator()(const char* name, T& value) const {
    used->insert(name);
    const YAML::Node item = node[name];
    if (!item) return;
    try {
      if constexpr (std::is_enum_v<T>)
        enum_from_string(item.as<std::string>(), value);
      else
        value = item.as<T>();
    } catch (const YAML::Exception&) {
      throw FormatError("config: bad value for " + section + "." + name);
    }
  }
};

inline void require_map(const YAML::Node& node, const std::string& section) {
  if (!node.IsMap()) throw FormatError("config: section '" + section + "' must be a mapping");
}

inline void reject_unknown(const YAML::Node& node, const std::string& section, const std::set<std::string>& used) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!used.contains(key)) throw FormatError("config: unknown parameter '" + key + "' in section '" + section + "'");
  }
}

template <class Opts>
void read_section(const YAML::Node& node, const std::string& section, Opts& opts,
                  std::set<std::string> extra_keys = {}) {
  require_map(node, section);
  std::set<std::string> used = std::move(extra_keys);
  visit_fields(opts, YamlReader{node, section, &used});
  reject_unknown(node, section, used);
}

template <class Opts>
void write_fields(YAML::Emitter& out, const Opts& opts) {
  visit_fields(opts, YamlWriter{out});
}

}  // namespace detail

inline std::string config_to_yaml(const PipelineConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "features" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "type" << YAML::Value << to_string(c.kind());
  std::visit([&](const auto& o) { detail::write_fields(out, o); }, c.features);
  out << YAML::EndMap;
  if (c.pitch) {
    out << YAML::Key << "pitch" << YAML::Value << YAML::BeginMap;
    detail::write_fields(out, c.pitch->pitch);
    out << YAML::Key << "postprocessing" << YAML::Value << YAML::BeginMap;
    detail::write_fields(out, c.pitch->postprocessing);
    out << YAML::EndMap << YAML::EndMap;
  }
  if (c.delta) {
    out << YAML::Key << "delta" << YAML::Value << YAML::BeginMap;
    detail::write_fields(out, *c.delta);
    out << YAML::EndMap;
  }
  if (c.cmvn) {
    out << YAML::Key << "cmvn" << YAML::Value << YAML::BeginMap;
    detail::write_fields(out, *c.cmvn);
    out << YAML::EndMap;
  }
  if (c.vtln) {
    out << YAML::Key << "vtln" << YAML::Value << YAML::BeginMap;
    detail::write_fields(out, *c.vtln);
    out << YAML::Key << "ubm" << YAML::Value << YAML::BeginMap;
    detail::write_fields(out, c.vtln->ubm);
    out << YAML::EndMap << YAML::EndMap;
  }
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

inline PipelineConfig config_from_yaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  detail::require_map(root, "<root>");
  PipelineConfig c;
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (key != "features" && key != "pitch" && key != "delta" && key != "cmvn" && key != "vtln" && key != "seed")
      throw FormatError("config: unknown section '" + key + "'");
  }
  const YAML::Node feats = root["features"];
  if (!feats) throw FormatError("config: missing 'features' section");
  detail::require_map(feats, "features");
  if (!feats["type"]) throw FormatError("config: missing features.type");
  switch (parse_feature_kind(feats["type"].as<std::string>())) {
    case FeatureKind::kSpectrogram: c.features = SpectrogramOptions{}; break;
    case FeatureKind::kFilterbank: c.features = FilterbankOptions{}; break;
    case FeatureKind::kMfcc: c.features = MfccOptions{}; break;
    case FeatureKind::kPlp: c.features = PlpOptions{}; break;
  }
  std::visit([&](auto& o) { detail::read_section(feats, "features", o, {"type"}); }, c.features);

  if (const YAML::Node p = root["pitch"]) {
    PitchConfig pc;
    detail::read_section(p, "pitch", pc.pitch, {"postprocessing"});
    if (const YAML::Node post = p["postprocessing"])
      detail::read_section(post, "pitch.postprocessing", pc.postprocessing);
    c.pitch = pc;
  }
  if (const YAML::Node d = root["delta"]) {
    DeltaOptions o;
    detail::read_section(d, "delta", o);
    c.delta = o;
  }
  if (const YAML::Node n = root["cmvn"]) {
    CmvnOptions o;
    detail::read_section(n, "cmvn", o);
    c.cmvn = o;
  }
  if (const YAML::Node v = root["vtln"]) {
    VtlnOptions o;
    detail::read_section(v, "vtln", o, {"ubm"});
    if (const YAML::Node u = v["ubm"]) detail::read_section(u, "vtln.ubm", o.ubm);
    c.vtln = o;
  }
  if (const YAML::Node s = root["seed"]) {
    try {
      c.seed = s.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      throw FormatError("config: seed must be a non-negative integer");
    }
  }
  c.validate();
  return c;
}

inline void save_config(const PipelineConfig& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out || !(out << config_to_yaml(c))) throw IoError("cannot write config file " + path.string());
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_yaml(ss.str());
}

/// The configuration as a JSON tree, stored in the properties of every output.
inline Properties config_to_json(const PipelineConfig& c) {
  Properties j = Properties::object();
  Properties feats = Properties::object();
  feats["type"] = to_string(c.kind());
  std::visit([&](const auto& o) { visit_fields(o, detail::JsonFieldWriter{feats}); }, c.features);
  j["features"] = feats;
  if (c.pitch) {
    Properties p = Properties::object(), post = Properties::object();
    visit_fields(c.pitch->pitch, detail::JsonFieldWriter{p});
    visit_fields(c.pitch->postprocessing, detail::JsonFieldWriter{post});
    p["postprocessing"] = post;
    j["pitch"] = p;
  }
  if (c.delta) {
    Properties d = Properties::object();
    visit_fields(*c.delta, detail::JsonFieldWriter{d});
    j["delta"] = d;
  }
  if (c.cmvn) {
    Properties n = Properties::object();
    visit_fields(*c.cmvn, detail::JsonFieldWriter{n});
    j["cmvn"] = n;
  }
  if (c.vtln) {
    Properties v = Properties::object(), u = Properties::object();
    visit_fields(*c.vtln, detail::JsonFieldWriter{v});
    visit_fields(c.vtln->ubm, detail::JsonFieldWriter{u});
    v["ubm"] = u;
    j["vtln"] = v;
  }
  j["seed"] = c.seed;
  return j;
}

// ---------------------------------------------------------------------------
// Execution

/// Failures of individual utterances, reported together.
class PipelineError : public Error {
 public:
  explicit PipelineError(std::vector<std::pair<std::string, std::string>> failures)
      : Error(summary(failures)), failures_(std::move(failures)) {}

  const std::vector<std::pair<std::string, std::string>>& failures() const noexcept { return failures_; }

 private:
  static std::string summary(const std::vector<std::pair<std::string, std::string>>& f) {
    std::string s = std::to_string(f.size()) + " utterance(s) failed";
    for (const auto& [name, msg] : f) s += "\n  " + name + ": " + msg;
    return s;
  }
  std::vector<std::pair<std::string, std::string>> failures_;
};

/// Random stream of one utterance: independent of scheduling and of the
/// other utterances.
inline std::uint64_t utterance_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (h | 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Raw features of the configured kind; spectrograms ignore the warp.
inline Features compute_raw_features(const FeatureOptions& opts, const Audio& audio, double warp,
                                     std::uint64_t seed) {
  return std::visit(
      [&](const auto& o) -> Features {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, SpectrogramOptions>) return spectrogram(audio, o, seed);
        else if constexpr (std::is_same_v<T, FilterbankOptions>) return filterbank(audio, o, warp, seed);
        else if constexpr (std::is_same_v<T, MfccOptions>) return mfcc(audio, o, warp, seed);
        else return plp(audio, o, warp, seed);
      },
      opts);
}

namespace detail {

inline Audio load_for_pipeline(const Utterance& u, int sample_rate) {
  Audio a = load_utterance(u);
  return a.sample_rate() == sample_rate ? a : resample(a, sample_rate);
}

// Keeps the utterance-level failures, ordered as in the manifest.
inline void throw_failures(const Utterances& utts, const std::vector<std::string>& errors) {
  std::vector<std::pair<std::string, std::string>> failures;
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) failures.emplace_back(utts[i].name, errors[i]);
  if (!failures.empty()) throw PipelineError(std::move(failures));
}

}  // namespace detail

/// Warps per speaker, estimated on the utterances themselves with MFCC
/// features using the configured framing.
inline std::map<std::string, double> estimate_pipeline_warps(const PipelineConfig& config, const Utterances& utts,
                                                             int njobs) {
  if (!config.vtln) throw InvalidArgument("configuration has no VTLN section");
  if (!utts.has_speakers()) throw InvalidArgument("VTLN requires utterances with speakers");
  const int rate = config.frame().sample_rate;
  std::vector<std::optional<Audio>> audio(utts.size());
  std::vector<std::string> errors(utts.size());
  parallel_for(utts.size(), njobs, [&](std::size_t i) {
    try {
      audio[i] = detail::load_for_pipeline(utts[i], rate);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  detail::throw_failures(utts, errors);

  std::map<std::string, std::size_t> index;
  std::map<std::string, std::string> utt2spk;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    index[utts[i].name] = i;
    utt2spk[utts[i].name] = *utts[i].speaker;
  }
  MfccOptions mopts;
  mopts.frame = config.frame();
  const WarpedExtractor extract = [&](const std::string& name, double warp) {
    return mfcc(*audio[index.at(name)], mopts, warp, utterance_seed(config.seed, name)).data();
  };
  return estimate_warps(utt2spk, extract, *config.vtln, config.seed, njobs);
}

/// Runs the configured pipeline on every utterance. The result does not
/// depend on njobs.
inline FeaturesCollection extract_features(const PipelineConfig& config, const Utterances& utts, int njobs = 1) {
  config.validate();
  if (njobs < 1) throw InvalidArgument("njobs must be at least 1");
  if (config.cmvn && config.cmvn->by == CmvnScope::kSpeaker && !utts.has_speakers())
    throw InvalidArgument("CMVN by speaker requires utterances with speakers");

  std::map<std::string, double> warps;
  if (config.vtln) warps = estimate_pipeline_warps(config, utts, njobs);

  const int rate = config.frame().sample_rate;
  std::vector<std::optional<Features>> results(utts.size());
  std::vector<std::string> errors(utts.size());
  parallel_for(utts.size(), njobs, [&](std::size_t i) {
    const Utterance& u = utts[i];
    try {
      const Audio audio = detail::load_for_pipeline(u, rate);
      const std::uint64_t seed = utterance_seed(config.seed, u.name);
      const double warp = config.vtln ? warps.at(*u.speaker) : 1.0;
      Features f = compute_raw_features(config.features, audio, warp, seed);
      if (config.delta) f = delta(f, *config.delta);
      if (config.pitch) {
        const Features raw = estimate_pitch(audio, config.pitch->pitch);
        f = concatenate(f, postprocess_pitch(raw, config.pitch->postprocessing, utterance_seed(seed, "pitch")));
      }
      results[i] = std::move(f);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  detail::throw_failures(utts, errors);

  FeaturesCollection coll;
  std::map<std::string, std::string> speakers;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    coll.insert(utts[i].name, std::move(*results[i]));
    if (utts[i].speaker) speakers[utts[i].name] = *utts[i].speaker;
  }
  if (config.cmvn) coll = cmvn_apply(coll, speakers, *config.cmvn);

  const Properties cfg = config_to_json(config);
  FeaturesCollection out;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const Utterance& u = utts[i];
    const Features& f = coll.at(u.name);
    Properties props = f.properties();
    props["pipeline"] = cfg;
    props["audio_file"] = u.audio_path.string();
    if (u.onset) props["segment"] = {*u.onset, *u.offset};
    if (u.speaker) props["speaker"] = *u.speaker;
    if (config.vtln) props["vtln_warp"] = warps.at(*u.speaker);
    out.insert(u.name, f.with_properties(std::move(props)));
  }
  return out;
}

}  // namespace speechfeat
