// speechfeat/features.hpp

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

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "speechfeat/error.hpp"

namespace speechfeat {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Properties = nlohmann::json;

/// Two frame times closer than this (in seconds) are considered equal.
inline constexpr double kTimesTolerance = 1e-9;

/// Throws InvariantError unless data/times/properties form a valid Features.
inline void validate_features(const Matrix& data, const Matrix& times, const Properties& props) {
  const auto m = data.rows();
  if (m < 1) throw InvariantError("features must have at least one frame");
  if (times.rows() != m)
    throw InvariantError("features have " + std::to_string(m) + " data rows but " +
                         std::to_string(times.rows()) + " time rows");
  if (times.cols() != 1 && times.cols() != 2)
    throw InvariantError("times must have 1 or 2 columns");
  if (!data.allFinite() || !times.allFinite())
    throw InvariantError("features contain non-finite values");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (i > 0 && !(times(i, 0) > times(i - 1, 0)))
      throw InvariantError("times are not strictly increasing at frame " + std::to_string(i));
    if (times.cols() == 2 && !(times(i, 0) < times(i, 1)))
      throw InvariantError("onset is not before offset at frame " + std::to_string(i));
  }
  if (!props.is_object()) throw InvariantError("features properties must be a JSON object");
}

/// A [m, n] feature matrix with its [m, 1] center times or [m, 2]
/// onset/offset times (seconds) and a tree of extraction properties.
class Features {
 public:
  Features(Matrix data, Matrix times, Properties properties = Properties::object())
      : data_(std::move(data)), times_(std::move(times)), properties_(std::move(properties)) {
    validate_features(data_, times_, properties_);
  }

  const Matrix& data() const noexcept { return data_; }
  const Matrix& times() const noexcept { return times_; }
  const Properties& properties() const noexcept { return properties_; }

  Eigen::Index num_frames() const noexcept { return data_.rows(); }
  Eigen::Index dim() const noexcept { return data_.cols(); }

  Features with_data(Matrix data) const { return Features(std::move(data), times_, properties_); }
  Features with_properties(Properties props) const {
    return Features(data_, times_, std::move(props));
  }

  friend bool operator==(const Features& a, const Features& b) {
    return a.data_.rows() == b.data_.rows() && a.data_.cols() == b.data_.cols() &&
           a.times_.cols() == b.times_.cols() && a.data_ == b.data_ && a.times_ == b.times_ &&
           a.properties_ == b.properties_;
  }

 private:
  Matrix data_;
  Matrix times_;
  Properties properties_;
};

/// Column vector of frame-center times.
inline Matrix center_times(const std::vector<double>& centers) {
  Matrix t(static_cast<Eigen::Index>(centers.size()), 1);
  for (std::size_t i = 0; i < centers.size(); ++i) t(static_cast<Eigen::Index>(i), 0) = centers[i];
  return t;
}

/// Converts center times to [onset, offset] rows for frames of the given length.
inline Features with_interval_times(const Features& f, double frame_length) {
  if (f.times().cols() == 2) return f;
  Matrix t(f.num_frames(), 2);
  t.col(0) = f.times().col(0).array() - frame_length / 2;
  t.col(1) = f.times().col(0).array() + frame_length / 2;
  return Features(f.data(), std::move(t), f.properties());
}

namespace detail {

// Properties of a processor output carry a "processor" key; merged properties
// map each source processor name to its own sub-tree.
inline void merge_properties_into(Properties& out, const Properties& p) {
  if (p.contains("processor") && p["processor"].is_string()) {
    std::string key = p["processor"].get<std::string>();
    for (int k = 2; out.contains(key); ++k) key = p["processor"].get<std::string>() + "_" + std::to_string(k);
    out[key] = p;
  } else {
    for (const auto& [k, v] : p.items()) {
      std::string key = k;
      for (int n = 2; out.contains(key); ++n) key = k + "_" + std::to_string(n);
      out[key] = v;
    }
  }
}

}  // namespace detail

/// Stacks the channels of a then b. Both must share frame times.
inline Features concatenate(const Features& a, const Features& b) {
  if (a.num_frames() != b.num_frames())
    throw InvalidArgument("cannot concatenate features with " + std::to_string(a.num_frames()) +
                          " and " + std::to_string(b.num_frames()) + " frames");
  if (a.times().cols() != b.times().cols() ||
      ((a.times() - b.times()).array().abs() > kTimesTolerance).any())
    throw InvalidArgument("cannot concatenate features with different frame times");
  Matrix data(a.num_frames(), a.dim() + b.dim());
  data.leftCols(a.dim()) = a.data();
  data.rightCols(b.dim()) = b.data();
  Properties props = Properties::object();
  detail::merge_properties_into(props, a.properties());
  detail::merge_properties_into(props, b.properties());
  return Features(std::move(data), a.times(), std::move(props));
}

/// Features indexed by utterance name.
class FeaturesCollection {
 public:
  using Map = std::map<std::string, Features>;

  void insert(std::string name, Features f) {
    if (name.empty()) throw InvalidArgument("features name is empty");
    items_.insert_or_assign(std::move(name), std::move(f));
  }

  const Features& at(const std::string& name) const {
    auto it = items_.find(name);
    if (it == items_.end()) throw InvalidArgument("no features named '" + name + "'");
    return it->second;
  }
  bool contains(const std::string& name) const { return items_.count(name) > 0; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  Map::const_iterator begin() const noexcept { return items_.begin(); }
  Map::const_iterator end() const noexcept { return items_.end(); }

  friend bool operator==(const FeaturesCollection&, const FeaturesCollection&) = default;

 private:
  Map items_;
};

enum class SerializationFormat { kCsv, kBinary };

inline SerializationFormat parse_format(std::string_view s) {
  if (s == "csv") return SerializationFormat::kCsv;
  if (s == "binary") return SerializationFormat::kBinary;
  throw InvalidArgument("unknown serialization format '" + std::string(s) + "'");
}

namespace detail {

inline constexpr char kBinaryMagic[4] = {'S', 'P', 'F', '1'};
// Key added to a csv sidecar to record the number of time columns.
inline constexpr const char* kCsvTimesKey = "__times_columns__";

inline void write_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
 public:
  ByteReader(std::string bytes, std::string origin)
      : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

  bool at_end() const { return pos_ == bytes_.size(); }

  std::string take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError(origin_ + ": truncated file");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint64_t u64() {
    const std::string b = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = v << 8 | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  std::string bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void save_binary(const FeaturesCollection& coll, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kBinaryMagic, 4);
  for (const auto& [name, f] : coll) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, static_cast<std::uint64_t>(f.num_frames()));
    write_u64(out, static_cast<std::uint64_t>(f.dim()));
    out.put(static_cast<char>(f.times().cols()));
    for (Eigen::Index i = 0; i < f.times().size(); ++i) write_f64(out, f.times().data()[i]);
    for (Eigen::Index i = 0; i < f.data().size(); ++i) write_f64(out, f.data().data()[i]);
    const std::string props = f.properties().dump();
    write_u64(out, props.size());
    out.write(props.data(), static_cast<std::streamsize>(props.size()));
  }
  if (!out.flush()) throw IoError("cannot write " + path.string());
}

inline FeaturesCollection load_binary(const std::filesystem::path& path) {
  ByteReader in(read_file(path), path.string());
  if (in.take(4) != std::string(kBinaryMagic, 4))
    throw FormatError(path.string() + ": bad magic number");
  FeaturesCollection coll;
  while (!in.at_end()) {
    const std::string name = in.take(in.u64());
    const auto m = in.u64(), n = in.u64();
    const auto t = in.u8();
    if (t != 1 && t != 2) throw FormatError(path.string() + ": invalid time dimension");
    if (m > (1ull << 40) || n > (1ull << 24)) throw FormatError(path.string() + ": implausible shape");
    Matrix times(static_cast<Eigen::Index>(m), t);
    for (Eigen::Index i = 0; i < times.size(); ++i) times.data()[i] = in.f64();
    Matrix data(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = in.f64();
    Properties props;
    try {
      props = Properties::parse(in.take(in.u64()));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ": bad properties for '" + name + "': " + e.what());
    }
    coll.insert(name, Features(std::move(data), std::move(times), std::move(props)));
  }
  return coll;
}

inline void save_csv(const FeaturesCollection& coll, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create directory " + dir.string());
  for (const auto& [name, f] : coll) {
    if (name.find_first_of("/\\") != std::string::npos || name == "." || name == "..")
      throw InvalidArgument("features name '" + name + "' cannot be used as a file name");
    std::ofstream csv(dir / (name + ".csv"));
    if (!csv) throw IoError("cannot write " + (dir / (name + ".csv")).string());
    for (Eigen::Index i = 0; i < f.num_frames(); ++i) {
      std::string row;
      for (Eigen::Index j = 0; j < f.times().cols(); ++j) {
        if (j) row += ',';
        row += format_double(f.times()(i, j));
      }
      for (Eigen::Index j = 0; j < f.dim(); ++j) row += ',' + format_double(f.data()(i, j));
      row += '\n';
      csv << row;
    }
    Properties sidecar = f.properties();
    sidecar[kCsvTimesKey] = f.times().cols();
    std::ofstream json(dir / (name + ".json"));
    json << sidecar.dump(2) << '\n';
    if (!csv.flush() || !json.flush()) throw IoError("cannot write features '" + name + "'");
  }
}

inline Features load_csv_item(const std::filesystem::path& csv_path,
                              const std::filesystem::path& json_path) {
  Properties props;
  try {
    props = Properties::parse(read_file(json_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(json_path.string() + ": " + e.what());
  }
  if (!props.is_object() || !props.contains(kCsvTimesKey) || !props[kCsvTimesKey].is_number_integer())
    throw FormatError(json_path.string() + ": missing time columns entry");
  const int tcols = props[kCsvTimesKey].get<int>();
  props.erase(kCsvTimesKey);
  if (tcols != 1 && tcols != 2) throw FormatError(json_path.string() + ": invalid time columns");

  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open " + csv_path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string_view field(line.data() + pos,
                                   (comma == std::string::npos ? line.size() : comma) - pos);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size())
        throw FormatError(csv_path.string() + ": invalid number '" + std::string(field) + "'");
      row.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError(csv_path.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(csv_path.string() + ": no frames");
  if (rows.front().size() < static_cast<std::size_t>(tcols))
    throw FormatError(csv_path.string() + ": fewer columns than time columns");
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(rows.front().size()) - tcols;
  Matrix times(m, tcols), data(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < tcols; ++j) times(i, j) = r[static_cast<std::size_t>(j)];
    for (Eigen::Index j = 0; j < n; ++j) data(i, j) = r[static_cast<std::size_t>(j + tcols)];
  }
  return Features(std::move(data), std::move(times), std::move(props));
}

inline FeaturesCollection load_csv(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  FeaturesCollection coll;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".csv") continue;
    auto json_path = entry.path();
    json_path.replace_extension(".json");
    if (!std::filesystem::exists(json_path))
      throw FormatError("missing properties file " + json_path.string());
    coll.insert(entry.path().stem().string(), load_csv_item(entry.path(), json_path));
  }
  return coll;
}

}  // namespace detail

/// Writes a collection. csv: `path` is a directory receiving `<name>.csv`
/// (time columns then data columns, no header) and `<name>.json` (properties).
/// binary: a single little-endian file, see README for the layout.
inline void save_collection(const FeaturesCollection& coll, const std::filesystem::path& path,
                            SerializationFormat format) {
  if (format == SerializationFormat::kCsv)
    detail::save_csv(coll, path);
  else
    detail::save_binary(coll, path);
}

inline FeaturesCollection load_collection(const std::filesystem::path& path,
                                          SerializationFormat format) {
  return format == SerializationFormat::kCsv ? detail::load_csv(path) : detail::load_binary(path);
}

}  // namespace speechfeat
