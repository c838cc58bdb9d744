#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "oslda/error.hpp"
#include "oslda/image.hpp"

namespace oslda {

inline constexpr int kBaseWindow = 24;

enum class HaarKind { TwoHorizontal, TwoVertical, ThreeHorizontal, FourDiagonal };

inline constexpr std::array<HaarKind, 4> kHaarKinds = {
    HaarKind::TwoHorizontal, HaarKind::TwoVertical, HaarKind::ThreeHorizontal,
    HaarKind::FourDiagonal};

inline std::string_view to_string(HaarKind k) {
  switch (k) {
    case HaarKind::TwoHorizontal: return "two-horizontal";
    case HaarKind::TwoVertical: return "two-vertical";
    case HaarKind::ThreeHorizontal: return "three";
    case HaarKind::FourDiagonal: return "four";
  }
  return "?";
}

inline HaarKind haar_kind_from_string(std::string_view s) {
  for (HaarKind k : kHaarKinds)
    if (to_string(k) == s) return k;
  throw ParseError("unknown Haar kind '" + std::string(s) + "'");
}

/// Number of blocks across and down for each kind.
inline constexpr int blocks_x(HaarKind k) {
  return k == HaarKind::TwoHorizontal || k == HaarKind::FourDiagonal ? 2
         : k == HaarKind::ThreeHorizontal                             ? 3
                                                                      : 1;
}
inline constexpr int blocks_y(HaarKind k) {
  return k == HaarKind::TwoVertical || k == HaarKind::FourDiagonal ? 2 : 1;
}

/// A rectangle feature in base-window coordinates. `block_w` x `block_h` is
/// the size of one block; the footprint is blocks_x*block_w by blocks_y*block_h.
struct HaarFeature {
  HaarKind kind = HaarKind::TwoHorizontal;
  int x = 0;
  int y = 0;
  int block_w = 1;
  int block_h = 1;

  int footprint_w() const { return blocks_x(kind) * block_w; }
  int footprint_h() const { return blocks_y(kind) * block_h; }
  bool fits(int base = kBaseWindow) const {
    return x >= 0 && y >= 0 && block_w >= 1 && block_h >= 1 && x + footprint_w() <= base &&
           y + footprint_h() <= base;
  }
  friend bool operator==(const HaarFeature&, const HaarFeature&) = default;
};

struct WeightedRect {
  int x, y, w, h;
  double coef;
};

/// Rectangles and coefficients of a feature placed at (ox, oy) with the given
/// block size. Coefficients weighted by area sum to zero for every kind.
inline std::vector<WeightedRect> haar_rects(HaarKind kind, int ox, int oy, int bw, int bh) {
  switch (kind) {
    case HaarKind::TwoHorizontal:
      return {{ox, oy, bw, bh, 1.0}, {ox + bw, oy, bw, bh, -1.0}};
    case HaarKind::TwoVertical:
      return {{ox, oy, bw, bh, 1.0}, {ox, oy + bh, bw, bh, -1.0}};
    case HaarKind::ThreeHorizontal:
      return {{ox, oy, bw, bh, 1.0}, {ox + bw, oy, bw, bh, -2.0}, {ox + 2 * bw, oy, bw, bh, 1.0}};
    case HaarKind::FourDiagonal:
      return {{ox, oy, bw, bh, 1.0},
              {ox + bw, oy, bw, bh, -1.0},
              {ox, oy + bh, bw, bh, -1.0},
              {ox + bw, oy + bh, bw, bh, 1.0}};
  }
  return {};
}

inline int scaled_length(int v, double scale) {
  return static_cast<int>(std::floor(v * scale + 1e-9));
}

/// A detection window: top-left corner in image pixels and a scale relative
/// to the base window.
struct Window {
  int x = 0;
  int y = 0;
  double scale = 1.0;
  int size(int base = kBaseWindow) const { return scaled_length(base, scale); }
};

/// Signed rectangle-sum difference of `f` inside `win`, divided by the window
/// area. Scaled positions and block sizes are floored, so a feature that fits
/// the base window always fits the scaled window.
inline double haar_value(const IntegralImage& ii, const HaarFeature& f, const Window& win,
                         int base = kBaseWindow) {
  const int ws = win.size(base);
  if (!ii.contains(win.x, win.y, ws, ws)) throw OutOfBounds("window outside image");
  const int ox = win.x + scaled_length(f.x, win.scale);
  const int oy = win.y + scaled_length(f.y, win.scale);
  const int bw = scaled_length(f.block_w, win.scale);
  const int bh = scaled_length(f.block_h, win.scale);
  if (bw < 1 || bh < 1 || ox + blocks_x(f.kind) * bw > win.x + ws ||
      oy + blocks_y(f.kind) * bh > win.y + ws) {
    throw OutOfBounds("scaled feature does not fit the window");
  }
  double acc = 0.0;
  for (const auto& r : haar_rects(f.kind, ox, oy, bw, bh)) acc += r.coef * ii.rect_sum(r.x, r.y, r.w, r.h);
  return acc / (static_cast<double>(ws) * ws);
}

/// Deterministic feature pool: for each kind, block sizes 1, 1+stride, ...
/// and positions 0, stride, ... that keep the footprint inside the base window.
inline std::vector<HaarFeature> enumerate_haar_features(int base = kBaseWindow, int stride = 1) {
  if (stride < 1) throw ConfigError("Haar enumeration stride must be >= 1");
  std::vector<HaarFeature> out;
  for (HaarKind kind : kHaarKinds) {
    const int kx = blocks_x(kind), ky = blocks_y(kind);
    for (int bw = 1; kx * bw <= base; bw += stride)
      for (int bh = 1; ky * bh <= base; bh += stride)
        for (int y = 0; y + ky * bh <= base; y += stride)
          for (int x = 0; x + kx * bw <= base; x += stride) out.push_back({kind, x, y, bw, bh});
  }
  return out;
}

/// Smallest stride whose enumeration has at most `target` features.
inline int stride_for_target(std::size_t target, int base = kBaseWindow) {
  for (int s = 1; s <= base; ++s)
    if (enumerate_haar_features(base, s).size() <= target) return s;
  return base;
}

}  // namespace oslda
