#pragma once

// Synthetic data with the shapes used by the experiments: 16x16 stroke
// digits '3' and '5', 24x24 face-like patches with cluttered negatives, and
// scenes with pasted faces for detection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "oslda/cascade.hpp"
#include "oslda/image.hpp"
#include "oslda/stump.hpp"

namespace oslda::synthetic {

struct Point {
  double x, y;
};

namespace detail {

inline double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

// Anti-aliased polyline of half-width r, painted with max-compositing.
inline void draw_polyline(Image& img, const std::vector<Point>& pts, double r, double ink) {
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Point p{x + 0.5, y + 0.5};
      double d = 1e9;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) d = std::min(d, segment_distance(p, pts[i], pts[i + 1]));
      const double cover = std::clamp(r + 0.5 - d, 0.0, 1.0);
      img.at(x, y) = std::max(img.at(x, y), ink * cover);
    }
  }
}

inline std::vector<Point> arc(Point c, double rx, double ry, double from, double to, int n) {
  std::vector<Point> out;
  for (int i = 0; i <= n; ++i) {
    const double t = from + (to - from) * i / n;
    out.push_back({c.x + rx * std::cos(t), c.y + ry * std::sin(t)});
  }
  return out;
}

}  // namespace detail

/// 16x16 handwritten-style digit in [0, 1]; `three` selects '3', else '5'.
inline Image digit(bool three, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr double pi = 3.14159265358979323846;
  std::vector<std::vector<Point>> strokes;
  if (three) {
    strokes.push_back(detail::arc({7.8, 5.2}, 3.3, 2.6, -pi * 0.95, pi * 0.5, 12));
    strokes.push_back(detail::arc({7.8, 10.6}, 3.7, 2.9, -pi * 0.5, pi * 0.95, 12));
  } else {
    strokes.push_back({{11.6, 2.6}, {5.2, 2.6}, {4.9, 7.4}});
    auto bowl = detail::arc({7.9, 10.4}, 3.7, 3.0, -pi * 0.8, pi * 0.9, 14);
    bowl.insert(bowl.begin(), Point{4.9, 7.4});
    strokes.push_back(bowl);
  }
  // Random affine about the centre plus per-point wobble.
  const double rot = 0.14 * g(rng), shear = 0.12 * g(rng);
  const double sx = 0.95 + 0.07 * g(rng), sy = 0.95 + 0.07 * g(rng);
  const double tx = 0.8 * g(rng), ty = 0.8 * g(rng);
  const double c = std::cos(rot), s = std::sin(rot);
  for (auto& st : strokes) {
    for (auto& p : st) {
      const double x = (p.x - 8) * sx + shear * (p.y - 8), y = (p.y - 8) * sy;
      p = {8 + c * x - s * y + tx + 0.35 * g(rng), 8 + s * x + c * y + ty + 0.35 * g(rng)};
    }
  }
  Image img(16, 16, 0.0);
  const double r = 0.55 + 0.35 * u(rng);
  const double ink = 0.75 + 0.25 * u(rng);
  for (const auto& st : strokes) detail::draw_polyline(img, st, r, ink);
  // A few samples get a stray stroke, which keeps the task from being trivial.
  if (u(rng) < 0.15) {
    const Point a{2 + 12 * u(rng), 2 + 12 * u(rng)};
    const Point b{a.x + 4 * g(rng), a.y + 4 * g(rng)};
    detail::draw_polyline(img, {a, b}, 0.5, 0.5 + 0.5 * u(rng));
  }
  for (auto& p : img.pixels) p = std::clamp(p + 0.04 * g(rng), 0.0, 1.0);
  return img;
}

struct DigitSet {
  std::vector<Image> images;
  std::vector<Label> labels;  // Positive = '3'
};

inline DigitSet digits(std::size_t threes, std::size_t fives, std::mt19937_64& rng) {
  DigitSet d;
  for (std::size_t i = 0; i < threes + fives; ++i) {
    const bool three = i < threes;
    d.images.push_back(digit(three, rng));
    d.labels.push_back(three ? Label::Positive : Label::Negative);
  }
  // Interleave classes deterministically.
  std::vector<std::size_t> order(d.images.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  DigitSet out;
  for (std::size_t i : order) {
    out.images.push_back(std::move(d.images[i]));
    out.labels.push_back(d.labels[i]);
  }
  return out;
}

/// Digit counts of the USPS 3-vs-5 split.
inline constexpr std::size_t kUspsTrainThrees = 406, kUspsTrainFives = 361;
inline constexpr std::size_t kUspsTestThrees = 418, kUspsTestFives = 355;

namespace detail {

inline void fill_ellipse(Image& img, double cx, double cy, double rx, double ry, double v, double alpha = 1.0) {
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      const double d = dx * dx + dy * dy;
      if (d <= 1.0) img.at(x, y) = (1 - alpha) * img.at(x, y) + alpha * v;
    }
  }
}

inline void fill_rect(Image& img, double x0, double y0, double x1, double y1, double v) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (x + 0.5 >= x0 && x + 0.5 < x1 && y + 0.5 >= y0 && y + 0.5 < y1) img.at(x, y) = v;
}

inline void finish(Image& img, std::mt19937_64& rng, double noise) {
  std::normal_distribution<double> g(0.0, noise);
  for (auto& p : img.pixels) p = std::clamp(std::round(p + g(rng)), 0.0, 255.0);
}

// Face drawn into a size x size canvas at scale size / 24.
inline Image face_raw(int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const double k = size / 24.0;
  const double skin = 120 + 80 * u(rng);
  const double bg = 40 + 170 * u(rng);
  Image img(size, size, bg);
  const double jx = 0.6 * g(rng) * k, jy = 0.6 * g(rng) * k;
  const double fw = (9.5 + 0.6 * g(rng)) * k, fh = (11.5 + 0.6 * g(rng)) * k;
  fill_ellipse(img, 12 * k + jx, 12.5 * k + jy, fw, fh, skin);
  const double dark = skin * (0.2 + 0.25 * u(rng));
  const double eye_y = (9.0 + 0.4 * g(rng)) * k + jy;
  const double eye_dx = (4.6 + 0.3 * g(rng)) * k;
  // Brows and eyes.
  fill_rect(img, 12 * k + jx - eye_dx - 2.6 * k, eye_y - 3.2 * k, 12 * k + jx - eye_dx + 2.6 * k, eye_y - 2.0 * k, dark);
  fill_rect(img, 12 * k + jx + eye_dx - 2.6 * k, eye_y - 3.2 * k, 12 * k + jx + eye_dx + 2.6 * k, eye_y - 2.0 * k, dark);
  fill_ellipse(img, 12 * k + jx - eye_dx, eye_y, 2.1 * k, 1.3 * k, dark);
  fill_ellipse(img, 12 * k + jx + eye_dx, eye_y, 2.1 * k, 1.3 * k, dark);
  // Bright nose bridge, dark mouth.
  fill_rect(img, 12 * k + jx - 1.0 * k, eye_y + 0.5 * k, 12 * k + jx + 1.0 * k, eye_y + 6.0 * k,
            std::min(255.0, skin * 1.18));
  const double mouth_y = eye_y + (8.3 + 0.4 * g(rng)) * k;
  fill_rect(img, 12 * k + jx - 3.6 * k, mouth_y, 12 * k + jx + 3.6 * k, mouth_y + 1.5 * k, dark * 1.3);
  // Side lighting.
  const double light = 30 * g(rng);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) img.at(x, y) += light * (x - size / 2.0) / size;
  return img;
}

inline Image clutter_raw(int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const double k = size / 24.0;
  Image img(size, size);
  const int kind = static_cast<int>(u(rng) * 5);
  if (kind == 0) {
    // Smooth gradient.
    const double a = 255 * u(rng), gx = 8 * g(rng), gy = 8 * g(rng);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) img.at(x, y) = a + gx * x / k + gy * y / k;
  } else if (kind == 1) {
    // Overlapping rectangles.
    std::fill(img.pixels.begin(), img.pixels.end(), 255 * u(rng));
    const int n = 2 + static_cast<int>(6 * u(rng));
    for (int i = 0; i < n; ++i) {
      const double x0 = 24 * k * u(rng), y0 = 24 * k * u(rng);
      fill_rect(img, x0, y0, x0 + 14 * k * u(rng), y0 + 14 * k * u(rng), 255 * u(rng));
    }
  } else if (kind == 2) {
    // Sinusoidal texture.
    const double fx = 0.2 + 1.2 * u(rng), fy = 0.2 + 1.2 * u(rng), ph = 6.28 * u(rng);
    const double a = 30 + 90 * u(rng), m = 60 + 130 * u(rng);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) img.at(x, y) = m + a * std::sin(fx * x / k + fy * y / k + ph);
  } else if (kind == 3) {
    // Blobs.
    std::fill(img.pixels.begin(), img.pixels.end(), 255 * u(rng));
    const int n = 1 + static_cast<int>(5 * u(rng));
    for (int i = 0; i < n; ++i)
      fill_ellipse(img, 24 * k * u(rng), 24 * k * u(rng), (1 + 8 * u(rng)) * k, (1 + 8 * u(rng)) * k, 255 * u(rng));
  } else {
    // Face fragments: misplaced dark features on a skin-like patch.
    const double skin = 110 + 90 * u(rng);
    std::fill(img.pixels.begin(), img.pixels.end(), skin);
    const double dark = skin * (0.2 + 0.3 * u(rng));
    const int n = 1 + static_cast<int>(3 * u(rng));
    for (int i = 0; i < n; ++i) {
      const double cx = 24 * k * u(rng), cy = 24 * k * u(rng);
      if (u(rng) < 0.5)
        fill_ellipse(img, cx, cy, 2.1 * k, 1.3 * k, dark);
      else
        fill_rect(img, cx - 3.6 * k, cy, cx + 3.6 * k, cy + 1.5 * k, dark);
    }
  }
  return img;
}

}  // namespace detail

/// 24x24 face-like patch, 8-bit range.
inline Image face_patch(std::mt19937_64& rng) {
  Image img = detail::face_raw(kBaseWindow, rng);
  detail::finish(img, rng, 6.0);
  return img;
}

/// 24x24 non-face patch drawn from several clutter families.
inline Image clutter_patch(std::mt19937_64& rng) {
  Image img = detail::clutter_raw(kBaseWindow, rng);
  detail::finish(img, rng, 6.0);
  return img;
}

struct PatchSet {
  std::vector<Image> images;
  std::vector<Label> labels;
};

inline PatchSet patches(std::size_t faces, std::size_t clutter, std::mt19937_64& rng) {
  PatchSet p;
  for (std::size_t i = 0; i < faces; ++i) {
    p.images.push_back(face_patch(rng));
    p.labels.push_back(Label::Positive);
  }
  for (std::size_t i = 0; i < clutter; ++i) {
    p.images.push_back(clutter_patch(rng));
    p.labels.push_back(Label::Negative);
  }
  return p;
}

struct Scene {
  Image image;
  std::vector<Detection> faces;
};

/// Clutter background with up to `max_faces` non-overlapping faces of side
/// 24..min(w,h)/2.
inline Scene scene(int width, int height, int max_faces, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Scene s;
  s.image = Image(width, height);
  // Tile the background with scaled clutter.
  const int tile = 48;
  for (int ty = 0; ty < height; ty += tile) {
    for (int tx = 0; tx < width; tx += tile) {
      const Image c = detail::clutter_raw(tile, rng);
      for (int y = 0; y < tile && ty + y < height; ++y)
        for (int x = 0; x < tile && tx + x < width; ++x) s.image.at(tx + x, ty + y) = c.at(x, y);
    }
  }
  const int max_side = std::max(kBaseWindow, std::min(width, height) / 2);
  for (int attempt = 0; attempt < 50 && static_cast<int>(s.faces.size()) < max_faces; ++attempt) {
    const int side = kBaseWindow + static_cast<int>(u(rng) * (max_side - kBaseWindow + 1));
    if (side > width || side > height) continue;
    const int x = static_cast<int>(u(rng) * (width - side + 1));
    const int y = static_cast<int>(u(rng) * (height - side + 1));
    const Detection box{x, y, side, side, 1.0};
    bool clash = false;
    for (const auto& f : s.faces) clash |= iou(f, box) > 0.0;
    if (clash) continue;
    const Image f = detail::face_raw(side, rng);
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) s.image.at(x + c, y + r) = f.at(c, r);
    s.faces.push_back(box);
  }
  detail::finish(s.image, rng, 6.0);
  return s;
}

}  // namespace oslda::synthetic
