// speechfeat/audio.hpp

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
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "speechfeat/error.hpp"

namespace speechfeat {

/// Mono waveform with samples normalized to [-1, 1].
class Audio {
 public:
  Audio(std::vector<double> samples, int sample_rate)
      : samples_(std::move(samples)), sample_rate_(sample_rate) {
    if (sample_rate_ <= 0)
      throw InvalidArgument("sample rate must be positive, got " +
                            std::to_string(sample_rate_));
    for (double x : samples_)
      if (!std::isfinite(x)) throw InvalidArgument("audio samples must be finite");
  }

  std::span<const double> samples() const noexcept { return samples_; }
  int sample_rate() const noexcept { return sample_rate_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double duration() const noexcept {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }

  friend bool operator==(const Audio&, const Audio&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_;
};

namespace detail {

inline std::uint32_t read_le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

inline std::uint16_t read_le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

inline void put_le(std::string& out, std::uint64_t value, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

}  // namespace detail

/// Decodes a RIFF/WAVE file holding mono PCM (8, 16 or 32-bit integers) or
/// 32-bit IEEE float samples. Integer samples are divided by the magnitude of
/// the most negative value of their type.
inline Audio load_wav(const std::filesystem::path& path) {
  using Code = AudioError::Code;
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw AudioError(Code::kMissingFile, "cannot open audio file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();

  auto malformed = [&](const std::string& why) {
    return AudioError(Code::kMalformedHeader, path.string() + ": " + why);
  };
  if (size < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
    throw malformed("not a RIFF/WAVE file");

  std::optional<std::uint16_t> format, channels, bits;
  std::uint32_t rate = 0;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const std::string id = bytes.substr(pos, 4);
    const std::size_t chunk_size = detail::read_le32(data + pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (chunk_size < 16 || body + 16 > size) throw malformed("truncated fmt chunk");
      format = detail::read_le16(data + body);
      channels = detail::read_le16(data + body + 2);
      rate = detail::read_le32(data + body + 4);
      bits = detail::read_le16(data + body + 14);
      // WAVE_FORMAT_EXTENSIBLE stores the actual format code in the sub-format GUID.
      if (*format == 0xFFFE) {
        if (chunk_size < 40 || body + 26 > size) throw malformed("truncated extensible fmt chunk");
        format = detail::read_le16(data + body + 24);
      }
    } else if (id == "data") {
      if (!format) throw malformed("data chunk precedes fmt chunk");
      pcm = data + body;
      pcm_size = std::min(chunk_size, size - body);
      break;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  if (!format) throw malformed("missing fmt chunk");
  if (!pcm) throw malformed("missing data chunk");
  if (*channels != 1)
    throw AudioError(Code::kMultiChannel, path.string() + ": expected 1 channel, found " +
                                              std::to_string(*channels));
  if (rate == 0) throw malformed("sample rate is zero");

  const bool is_int = *format == 1 && (*bits == 8 || *bits == 16 || *bits == 32);
  const bool is_float = *format == 3 && *bits == 32;
  if (!is_int && !is_float)
    throw AudioError(Code::kUnsupportedEncoding,
                     path.string() + ": unsupported encoding (format " + std::to_string(*format) +
                         ", " + std::to_string(*bits) + " bits)");

  const std::size_t width = *bits / 8;
  const std::size_t count = pcm_size / width;
  std::vector<double> samples(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char* p = pcm + i * width;
    if (is_float) {
      samples[i] = std::bit_cast<float>(detail::read_le32(p));
    } else if (width == 1) {
      samples[i] = (static_cast<int>(p[0]) - 128) / 128.0;
    } else if (width == 2) {
      samples[i] = static_cast<std::int16_t>(detail::read_le16(p)) / 32768.0;
    } else {
      samples[i] = static_cast<std::int32_t>(detail::read_le32(p)) / 2147483648.0;
    }
  }
  try {
    return Audio(std::move(samples), static_cast<int>(rate));
  } catch (const InvalidArgument& e) {
    throw AudioError(Code::kUnsupportedEncoding, path.string() + ": " + e.what());
  }
}

/// Writes 16-bit PCM; samples are rounded to the nearest integer step and clipped.
inline void write_wav(const std::filesystem::path& path, const Audio& audio) {
  std::string out;
  const std::uint32_t data_size = static_cast<std::uint32_t>(audio.size() * 2);
  out.reserve(44 + data_size);
  out += "RIFF";
  detail::put_le(out, 36 + data_size, 4);
  out += "WAVEfmt ";
  detail::put_le(out, 16, 4);
  detail::put_le(out, 1, 2);  // PCM
  detail::put_le(out, 1, 2);  // mono
  detail::put_le(out, static_cast<std::uint32_t>(audio.sample_rate()), 4);
  detail::put_le(out, static_cast<std::uint32_t>(audio.sample_rate()) * 2, 4);
  detail::put_le(out, 2, 2);
  detail::put_le(out, 16, 2);
  out += "data";
  detail::put_le(out, data_size, 4);
  for (double x : audio.samples()) {
    const double scaled = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
    detail::put_le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)), 2);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file || !file.write(out.data(), static_cast<std::streamsize>(out.size())))
    throw IoError("cannot write audio file " + path.string());
}

/// Hann-windowed low-pass sinc with the given cutoff (Hz), nonzero for
/// |t| < num_zeros / (2 cutoff).
inline double windowed_sinc(double t, double cutoff, double num_zeros) {
  const double half = num_zeros / (2.0 * cutoff);
  if (std::abs(t) >= half) return 0.0;
  const double window = 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * cutoff / num_zeros * t));
  const double sinc =
      t != 0.0 ? std::sin(2.0 * std::numbers::pi * cutoff * t) / (std::numbers::pi * t) : 2.0 * cutoff;
  return window * sinc;
}

/// Band-limited resampler between two integer rates. Output sample k sits at
/// time k / out_rate and is a Hann-windowed sinc interpolation of the input
/// with the given cutoff (Hz) and number of zero crossings on each side.
/// Filter weights are precomputed for each of the out_rate / gcd phases.
class Resampler {
 public:
  Resampler(int in_rate, int out_rate, double cutoff, double num_zeros)
      : in_rate_(in_rate), out_rate_(out_rate), cutoff_(cutoff), num_zeros_(num_zeros) {
    if (in_rate <= 0 || out_rate <= 0) throw InvalidArgument("resampling rates must be positive");
    if (!(cutoff > 0.0) || cutoff > 0.5 * std::min(in_rate, out_rate) + 1e-9)
      throw InvalidArgument("resampling cutoff must lie in (0, min(rates)/2]");
    if (!(num_zeros > 0.0)) throw InvalidArgument("number of zero crossings must be positive");
    const int base = std::gcd(in_rate, out_rate);
    input_per_unit_ = in_rate / base;
    output_per_unit_ = out_rate / base;
    const double window_width = num_zeros / (2.0 * cutoff);
    phases_.resize(static_cast<std::size_t>(output_per_unit_));
    for (int i = 0; i < output_per_unit_; ++i) {
      const double t = static_cast<double>(i) / out_rate;
      Phase& ph = phases_[static_cast<std::size_t>(i)];
      ph.first = static_cast<long>(std::ceil((t - window_width) * in_rate));
      const long last = static_cast<long>(std::floor((t + window_width) * in_rate));
      for (long j = ph.first; j <= last; ++j)
        ph.weights.push_back(filter(static_cast<double>(j) / in_rate - t) / in_rate);
    }
  }

  /// Number of output samples for num_in input samples, round(n * out / in).
  std::size_t output_size(std::size_t num_in) const {
    const auto n = static_cast<unsigned long long>(num_in);
    return static_cast<std::size_t>((n * out_rate_ + in_rate_ / 2) / in_rate_);
  }

  std::vector<double> resample(std::span<const double> input) const {
    const std::size_t n_out = output_size(input.size());
    const long n_in = static_cast<long>(input.size());
    std::vector<double> out(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
      const long unit = static_cast<long>(k) / output_per_unit_;
      const Phase& ph = phases_[k % static_cast<std::size_t>(output_per_unit_)];
      const long start = unit * input_per_unit_ + ph.first;
      double acc = 0.0;
      for (std::size_t w = 0; w < ph.weights.size(); ++w) {
        const long j = start + static_cast<long>(w);
        if (j >= 0 && j < n_in) acc += ph.weights[w] * input[static_cast<std::size_t>(j)];
      }
      out[k] = acc;
    }
    return out;
  }

 private:
  struct Phase {
    long first = 0;
    std::vector<double> weights;
  };

  double filter(double t) const { return windowed_sinc(t, cutoff_, num_zeros_); }

  int in_rate_, out_rate_;
  double cutoff_, num_zeros_;
  long input_per_unit_ = 1, output_per_unit_ = 1;
  std::vector<Phase> phases_;
};

/// Zero crossings of the general-purpose resampling filter.
inline constexpr double kResampleZeroCrossings = 64.0;
/// Passband edge of the general-purpose resampler, relative to the lower Nyquist.
inline constexpr double kResampleRolloff = 0.95;

/// Resamples to target_rate; returns the input unchanged when the rates match.
inline Audio resample(const Audio& audio, int target_rate) {
  if (target_rate <= 0)
    throw InvalidArgument("target sample rate must be positive, got " +
                          std::to_string(target_rate));
  if (target_rate == audio.sample_rate()) return audio;
  const double cutoff =
      0.5 * std::min(audio.sample_rate(), target_rate) * kResampleRolloff;
  Resampler r(audio.sample_rate(), target_rate, cutoff, kResampleZeroCrossings);
  return Audio(r.resample(audio.samples()), target_rate);
}

/// Samples in [floor(onset * rate), floor(offset * rate)).
inline Audio segment(const Audio& audio, double onset, double offset) {
  if (!(onset >= 0.0) || !(onset < offset) || offset > audio.duration() + 1e-12)
    throw InvalidArgument("segment bounds [" + std::to_string(onset) + ", " +
                          std::to_string(offset) + "] out of range for a " +
                          std::to_string(audio.duration()) + " s signal");
  const auto first = static_cast<std::size_t>(std::floor(onset * audio.sample_rate()));
  const auto last = std::min(audio.size(), static_cast<std::size_t>(
                                               std::floor(offset * audio.sample_rate())));
  auto s = audio.samples();
  return Audio(std::vector<double>(s.begin() + static_cast<long>(first),
                                   s.begin() + static_cast<long>(last)),
               audio.sample_rate());
}

struct Utterance {
  std::string name;
  std::filesystem::path audio_path;
  std::optional<std::string> speaker;
  std::optional<double> onset;
  std::optional<double> offset;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

/// Ordered utterances with distinct names; either every item has a speaker or none has.
class Utterances {
 public:
  Utterances() = default;

  explicit Utterances(std::vector<Utterance> items) : items_(std::move(items)) {
    std::unordered_set<std::string> seen;
    for (const auto& u : items_) {
      if (u.name.empty()) throw InvalidArgument("utterance name is empty");
      if (!seen.insert(u.name).second)
        throw InvalidArgument("duplicate utterance name '" + u.name + "'");
      if (u.speaker.has_value() != items_.front().speaker.has_value())
        throw InvalidArgument("utterances must either all have a speaker or none");
      if (u.onset.has_value() != u.offset.has_value())
        throw InvalidArgument("utterance '" + u.name + "' has only one time bound");
      if (u.onset && (*u.onset < 0.0 || *u.onset >= *u.offset))
        throw InvalidArgument("utterance '" + u.name + "' needs 0 <= onset < offset");
    }
  }

  const std::vector<Utterance>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  auto begin() const noexcept { return items_.begin(); }
  auto end() const noexcept { return items_.end(); }
  const Utterance& operator[](std::size_t i) const { return items_[i]; }

  bool has_speakers() const noexcept {
    return !items_.empty() && items_.front().speaker.has_value();
  }

 private:
  std::vector<Utterance> items_;
};

namespace detail {

inline std::optional<double> parse_number(const std::string& field) {
  double value = 0.0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace detail

/// Parses a manifest with one utterance per line:
///   <name> <wav>
///   <name> <wav> <speaker>
///   <name> <wav> <onset> <offset>
///   <name> <wav> <speaker> <onset> <offset>
/// All lines must share one shape. Blank lines are ignored.
inline Utterances parse_utterances(std::istream& in) {
  enum class Shape { kPlain, kSpeaker, kTimes, kSpeakerTimes };
  std::vector<Utterance> items;
  std::optional<Shape> shape;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields_in(line);
    std::vector<std::string> f;
    for (std::string w; fields_in >> w;) f.push_back(w);
    if (f.empty()) continue;

    auto fail = [&](const std::string& why) {
      return FormatError("utterances line " + std::to_string(lineno) + ": " + why);
    };
    Utterance u{f[0], f.size() > 1 ? f[1] : "", {}, {}, {}};
    Shape s;
    if (f.size() == 2) {
      s = Shape::kPlain;
    } else if (f.size() == 3) {
      if (detail::parse_number(f[2])) throw fail("onset given without offset");
      s = Shape::kSpeaker;
      u.speaker = f[2];
    } else if (f.size() == 4 || f.size() == 5) {
      const std::size_t t = f.size() - 2;
      auto onset = detail::parse_number(f[t]);
      auto offset = detail::parse_number(f[t + 1]);
      if (f.size() == 4 && !onset) throw fail("expected numeric onset in field 3");
      if (!onset || !offset) throw fail("onset and offset must be numbers");
      if (*onset < 0.0 || *onset >= *offset) throw fail("need 0 <= onset < offset");
      if (f.size() == 5) {
        if (detail::parse_number(f[2])) throw fail("speaker field looks like a number");
        u.speaker = f[2];
      }
      s = f.size() == 4 ? Shape::kTimes : Shape::kSpeakerTimes;
      u.onset = onset;
      u.offset = offset;
    } else {
      throw fail("expected 2 to 5 fields, found " + std::to_string(f.size()));
    }
    if (shape && *shape != s) throw fail("line shape differs from previous lines");
    shape = s;
    items.push_back(std::move(u));
  }
  try {
    return Utterances(std::move(items));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("utterances: ") + e.what());
  }
}

inline Utterances parse_utterances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open utterances file " + path.string());
  return parse_utterances(in);
}

/// Loads an utterance's audio, cut to its time bounds when present.
inline Audio load_utterance(const Utterance& u) {
  Audio audio = load_wav(u.audio_path);
  if (u.onset) return segment(audio, *u.onset, *u.offset);
  return audio;
}

}  // namespace speechfeat
