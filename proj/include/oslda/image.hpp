#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oslda/error.hpp"

namespace oslda {

/// Row-major grayscale raster. Pixel values are kept as doubles so that
/// 8-bit input and synthetic real-valued patches share one type.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const { return width <= 0 || height <= 0; }
};

/// Summed-area table: cumulative(x, y) is the sum of pixels with column < x
/// and row < y, so the table is (width+1) x (height+1).
class IntegralImage {
 public:
  IntegralImage() = default;

  explicit IntegralImage(const Image& img) : width_(img.width), height_(img.height) {
    if (img.empty()) throw DimensionMismatch("integral image of an empty image");
    const int stride = width_ + 1;
    table_.assign(static_cast<std::size_t>(stride) * (height_ + 1), 0.0);
    for (int y = 0; y < height_; ++y) {
      double row = 0.0;
      for (int x = 0; x < width_; ++x) {
        row += img.at(x, y);
        table_[static_cast<std::size_t>(y + 1) * stride + x + 1] =
            table_[static_cast<std::size_t>(y) * stride + x + 1] + row;
      }
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }

  double cumulative(int x, int y) const {
    return table_[static_cast<std::size_t>(y) * (width_ + 1) + x];
  }

  /// Sum over the w x h rectangle with top-left corner (x, y). Four lookups.
  double rect_sum(int x, int y, int w, int h) const {
    return cumulative(x + w, y + h) - cumulative(x, y + h) - cumulative(x + w, y) +
           cumulative(x, y);
  }

  bool contains(int x, int y, int w, int h) const {
    return x >= 0 && y >= 0 && w >= 0 && h >= 0 && x + w <= width_ && y + h <= height_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> table_;
};

inline IntegralImage integral_image(const Image& img) { return IntegralImage(img); }

/// Bilinear resampling to an exact target size.
inline Image resize_bilinear(const Image& src, int w, int h) {
  if (src.empty() || w <= 0 || h <= 0) throw DimensionMismatch("resize of empty image");
  if (src.width == w && src.height == h) return src;
  Image out(w, h);
  const double sx = static_cast<double>(src.width) / w;
  const double sy = static_cast<double>(src.height) / h;
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double tx = fx - x0;
      const double top = src.at(x0, y0) * (1 - tx) + src.at(x1, y0) * tx;
      const double bot = src.at(x0, y1) * (1 - tx) + src.at(x1, y1) * tx;
      out.at(x, y) = top * (1 - ty) + bot * ty;
    }
  }
  return out;
}

/// Copies the w x h sub-window at (x, y).
inline Image crop(const Image& src, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || x + w > src.width || y + h > src.height) {
    throw OutOfBounds("crop window outside image");
  }
  Image out(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(c, r) = src.at(x + c, y + r);
  return out;
}

namespace detail {
inline std::string next_pnm_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string discard;
      std::getline(in, discard);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}
}  // namespace detail

/// Reads an 8-bit PGM raster (binary P5 or ASCII P2).
inline Image read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open image " + path);
  const std::string magic = detail::next_pnm_token(in);
  if (magic != "P5" && magic != "P2") throw ParseError(path + ": not a PGM file");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(detail::next_pnm_token(in));
    h = std::stoi(detail::next_pnm_token(in));
    maxval = std::stoi(detail::next_pnm_token(in));
  } catch (const std::exception&) {
    throw ParseError(path + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw ParseError(path + ": unsupported PGM header (8-bit grayscale only)");
  }
  Image img(w, h);
  if (magic == "P5") {
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
      throw ParseError(path + ": truncated pixel data");
    }
    for (std::size_t i = 0; i < buf.size(); ++i) img.pixels[i] = buf[i];
  } else {
    for (auto& p : img.pixels) {
      const std::string tok = detail::next_pnm_token(in);
      if (tok.empty()) throw ParseError(path + ": truncated pixel data");
      p = std::stoi(tok);
    }
  }
  return img;
}

/// Writes a binary PGM; values are rounded and clamped to [0, 255].
inline void write_pgm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write image " + path);
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (double v : img.pixels) {
    const long q = std::lround(std::clamp(v, 0.0, 255.0));
    out.put(static_cast<char>(static_cast<unsigned char>(q)));
  }
}

}  // namespace oslda
