#pragma once

// Dataset ingestion: vector tables (delimited numeric rows, label last) and
// image directories (pos/ and neg/ subtrees of PGM rasters), seeded stream
// splits, and a converter for the LIBSVM-layout USPS files.

#include <algorithm>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <span>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oslda/error.hpp"
#include "oslda/haar.hpp"
#include "oslda/image.hpp"
#include "oslda/stump.hpp"

namespace oslda {

/// Labeled samples. Vector samples are rows of `values` (row-major,
/// size() x dim). Image datasets also keep the rasters; their `values` are
/// the pixels of the resized patches.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<Label> labels;
  std::vector<Image> images;
  std::string source;

  std::size_t size() const { return labels.size(); }
  bool has_images() const { return !images.empty(); }
  double at(std::size_t sample, std::size_t feature) const { return values[sample * dim + feature]; }
  std::size_t count(Label l) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
  }

  void push(std::span<const double> row, Label l) {
    if (labels.empty() && dim == 0) dim = row.size();
    if (row.size() != dim) throw DimensionMismatch("sample has " + std::to_string(row.size()) +
                                                   " values, dataset dimension is " + std::to_string(dim));
    values.insert(values.end(), row.begin(), row.end());
    labels.push_back(l);
  }

  /// Samples at `idx`, in that order.
  Dataset subset(std::span<const std::size_t> idx) const {
    Dataset d;
    d.dim = dim;
    d.source = source;
    for (std::size_t i : idx) {
      if (i >= size()) throw OutOfBounds("subset index out of range");
      d.values.insert(d.values.end(), values.begin() + i * dim, values.begin() + (i + 1) * dim);
      d.labels.push_back(labels[i]);
      if (has_images()) d.images.push_back(images[i]);
    }
    return d;
  }
};

inline Label parse_label(const std::string& tok) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || errno) throw ParseError("bad label '" + tok + "'");
  if (v == 1.0) return Label::Positive;
  if (v == 0.0 || v == -1.0) return Label::Negative;
  throw ParseError("label must be 1 (positive) or 0/-1 (negative), got '" + tok + "'");
}

namespace detail {

inline std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  return s.substr(b);
}

// Comma-separated when the line has a comma, otherwise whitespace-separated.
inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  if (line.find(',') != std::string::npos) {
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  }
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

inline bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(tok.c_str(), &end);
  return end != tok.c_str() && *end == '\0' && errno != ERANGE;
}

}  // namespace detail

/// Reads a vector table: one sample per line, numeric fields separated by
/// commas (or whitespace), label in the last column (1 positive, 0 or -1
/// negative). A first line that is not numeric is taken as a header; blank
/// lines and lines starting with '#' are skipped.
inline Dataset load_vector_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  Dataset d;
  d.source = path;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split_fields(line);
    double probe = 0.0;
    if (first && !fields.empty() && !detail::parse_double(fields.front(), probe)) {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() < 2) throw ParseError(path + ":" + std::to_string(lineno) + ": row needs values and a label");
    row.assign(fields.size() - 1, 0.0);
    for (std::size_t i = 0; i + 1 < fields.size(); ++i) {
      if (!detail::parse_double(fields[i], row[i])) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": field " + std::to_string(i + 1) +
                         " is not a number: '" + fields[i] + "'");
      }
    }
    if (!d.labels.empty() && row.size() != d.dim) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": row " + std::to_string(lineno) + " has " +
                       std::to_string(row.size()) + " values, expected " + std::to_string(d.dim));
    }
    Label l;
    try {
      l = parse_label(fields.back());
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    d.push(row, l);
  }
  if (d.labels.empty()) throw ParseError(path + ": no samples");
  return d;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes a vector table with a header row; values keep 17 significant digits.
inline void save_vector_table(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  for (std::size_t f = 0; f < d.dim; ++f) out << 'f' << f << ',';
  out << "label\n";
  for (std::size_t j = 0; j < d.size(); ++j) {
    for (std::size_t f = 0; f < d.dim; ++f) out << format_double(d.at(j, f)) << ',';
    out << (is_positive(d.labels[j]) ? 1 : 0) << '\n';
  }
}

namespace detail {
inline std::vector<std::filesystem::path> pgm_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}
}  // namespace detail

/// Reads `root/pos/**.pgm` and `root/neg/**.pgm` in sorted path order,
/// resizing every raster to side x side.
inline Dataset load_image_directory(const std::string& root, int side = kBaseWindow) {
  const std::filesystem::path base(root);
  const auto pos = detail::pgm_files(base / "pos");
  const auto neg = detail::pgm_files(base / "neg");
  if (pos.empty() && neg.empty()) throw ParseError(root + ": expected PGM files under pos/ and neg/");
  Dataset d;
  d.source = root;
  d.dim = static_cast<std::size_t>(side) * side;
  for (const auto* list : {&pos, &neg}) {
    const Label l = list == &pos ? Label::Positive : Label::Negative;
    for (const auto& p : *list) {
      Image img = resize_bilinear(read_pgm(p.string()), side, side);
      d.values.insert(d.values.end(), img.pixels.begin(), img.pixels.end());
      d.labels.push_back(l);
      d.images.push_back(std::move(img));
    }
  }
  return d;
}

/// Writes patches as `root/pos/NNNNN.pgm` and `root/neg/NNNNN.pgm`.
inline void save_image_directory(const std::string& root, const std::vector<Image>& images,
                                 std::span<const Label> labels) {
  const std::filesystem::path base(root);
  std::filesystem::create_directories(base / "pos");
  std::filesystem::create_directories(base / "neg");
  char name[32];
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::snprintf(name, sizeof name, "%06zu.pgm", i);
    write_pgm((base / (is_positive(labels[i]) ? "pos" : "neg") / name).string(), images[i]);
  }
}

enum class DatasetFormat { VectorTable, ImageDirectory };

inline DatasetFormat dataset_format_from_string(const std::string& s) {
  if (s == "vector-table" || s == "csv") return DatasetFormat::VectorTable;
  if (s == "image-directory" || s == "images") return DatasetFormat::ImageDirectory;
  throw ConfigError("unknown dataset format '" + s + "'");
}

inline Dataset load_dataset(const std::string& path, DatasetFormat format) {
  return format == DatasetFormat::VectorTable ? load_vector_table(path) : load_image_directory(path);
}

/// Infers the format: directories are image datasets.
inline Dataset load_dataset(const std::string& path) {
  return load_dataset(path, std::filesystem::is_directory(path) ? DatasetFormat::ImageDirectory
                                                               : DatasetFormat::VectorTable);
}

/// Dataset from images, using raw pixels as vector values.
inline Dataset dataset_from_images(std::vector<Image> images, std::vector<Label> labels,
                                   std::string source = "synthetic") {
  Dataset d;
  d.source = std::move(source);
  if (!images.empty()) d.dim = static_cast<std::size_t>(images[0].width) * images[0].height;
  for (std::size_t i = 0; i < images.size(); ++i) d.push(images[i].pixels, labels[i]);
  d.images = std::move(images);
  return d;
}

struct StreamSplit {
  std::vector<std::size_t> initial;
  std::vector<std::size_t> stream;
};

/// Seeded shuffle of 0..n-1; the first floor(fraction * n) indices form the
/// initial set and the rest, in shuffled order, the stream.
inline StreamSplit split_stream(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("initial fraction must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  StreamSplit s;
  s.initial.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  s.stream.assign(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  return s;
}

/// Converts a LIBSVM-layout USPS file ("label idx:value ...", 1-based
/// indices, 256 features) to a two-class dataset. Rows whose label is
/// neither `positive_label` nor `negative_label` are dropped. Intensities are
/// rescaled to [0, 1] by (v - lo) / (hi - lo) with hi the largest value in
/// the file and lo = min(0, smallest value), so files already in [0, m]
/// are divided by their maximum.
inline Dataset convert_usps(const std::string& path, const std::string& positive_label,
                            const std::string& negative_label, std::size_t dim = 256) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  Dataset d;
  d.source = path;
  d.dim = dim;
  std::string line;
  std::size_t lineno = 0;
  double lo = 0.0, hi = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string lab, tok;
    ss >> lab;
    std::vector<double> row(dim, 0.0);
    while (ss >> tok) {
      const auto colon = tok.find(':');
      double v = 0.0;
      if (colon == std::string::npos || !detail::parse_double(tok.substr(colon + 1), v)) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": bad entry '" + tok + "'");
      }
      const long idx = std::strtol(tok.substr(0, colon).c_str(), nullptr, 10);
      if (idx < 1 || static_cast<std::size_t>(idx) > dim) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": feature index " + std::to_string(idx) +
                         " outside 1.." + std::to_string(dim));
      }
      row[static_cast<std::size_t>(idx - 1)] = v;
    }
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    double lv = 0.0, pv = 0.0, nv = 0.0;
    const bool numeric = detail::parse_double(lab, lv) && detail::parse_double(positive_label, pv) &&
                         detail::parse_double(negative_label, nv);
    const bool is_pos = numeric ? lv == pv : lab == positive_label;
    const bool is_neg = numeric ? lv == nv : lab == negative_label;
    if (is_pos || is_neg) d.push(row, is_pos ? Label::Positive : Label::Negative);
  }
  if (d.labels.empty()) throw ParseError(path + ": no rows with labels " + positive_label + " or " + negative_label);
  const double span = hi - lo;
  for (double& v : d.values) v = span > 0 ? (v - lo) / span : 0.0;
  return d;
}

}  // namespace oslda
