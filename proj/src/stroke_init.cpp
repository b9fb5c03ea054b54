#include "glyphforge/stroke_init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glyphforge/errors.hpp"
#include "glyphforge/rng.hpp"

namespace glyphforge {
namespace {

struct GradientField {
  int height = 0;
  int width = 0;
  std::vector<double> gx;
  std::vector<double> gy;
};

// Central differences; out-of-range neighbours reflect onto the edge pixel.
GradientField central_gradient(const ActivationMap& map) {
  GradientField g;
  g.height = map.height;
  g.width = map.width;
  g.gx.resize(map.data.size());
  g.gy.resize(map.data.size());
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const int cl = std::max(c - 1, 0), cr = std::min(c + 1, map.width - 1);
      const int ru = std::max(r - 1, 0), rd = std::min(r + 1, map.height - 1);
      const std::size_t i = static_cast<std::size_t>(r) * map.width + c;
      g.gx[i] = 0.5 * (map.at(r, cr) - map.at(r, cl));
      g.gy[i] = 0.5 * (map.at(rd, c) - map.at(ru, c));
    }
  }
  return g;
}

Point2 sample_gradient(const GradientField& g, Point2 p) {
  const double x = std::clamp(p.x, 0.0, g.width - 1.0);
  const double y = std::clamp(p.y, 0.0, g.height - 1.0);
  const int c0 = static_cast<int>(std::floor(x));
  const int r0 = static_cast<int>(std::floor(y));
  const int c1 = std::min(c0 + 1, g.width - 1);
  const int r1 = std::min(r0 + 1, g.height - 1);
  const double wx = x - c0, wy = y - r0;
  const auto lerp2 = [&](const std::vector<double>& f) {
    const auto at = [&](int r, int c) { return f[static_cast<std::size_t>(r) * g.width + c]; };
    return (1 - wy) * ((1 - wx) * at(r0, c0) + wx * at(r0, c1)) + wy * ((1 - wx) * at(r1, c0) + wx * at(r1, c1));
  };
  return {lerp2(g.gx), lerp2(g.gy)};
}

struct Box {
  double x0, x1, y0, y1;

  bool contains(Point2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }

  // Distance along unit direction dir from p (inside) to the box boundary.
  double exit_distance(Point2 p, Point2 dir) const {
    double t = std::numeric_limits<double>::infinity();
    if (dir.x > 0) t = std::min(t, (x1 - p.x) / dir.x);
    if (dir.x < 0) t = std::min(t, (x0 - p.x) / dir.x);
    if (dir.y > 0) t = std::min(t, (y1 - p.y) / dir.y);
    if (dir.y < 0) t = std::min(t, (y0 - p.y) / dir.y);
    return t;
  }
};

}  // namespace

void validate(const ActivationMap& map) {
  if (map.height <= 0 || map.width <= 0) throw ContractError("activation map dimensions must be positive");
  if (map.data.size() != static_cast<std::size_t>(map.height) * map.width) {
    throw ContractError("activation map data size does not match H*W");
  }
  for (double v : map.data) {
    if (!std::isfinite(v) || v < 0.0) throw ContractError("activation map values must be finite and nonnegative");
  }
}

int resolved_border_margin(const SamplerConfig& cfg, int height, int width) {
  if (cfg.border_margin) return *cfg.border_margin;
  return static_cast<int>(std::floor(0.02 * std::min(height, width)));
}

int window_side(const SamplerConfig& cfg, int height, int width) {
  return std::max(1, static_cast<int>(std::lround(cfg.window_frac * std::min(height, width))));
}

void validate(const SamplerConfig& cfg, int height, int width) {
  if (!(cfg.temperature > 0.0)) throw ContractError("temperature must be positive");
  if (!(cfg.suppression_sigma > 0.0)) throw ContractError("suppression sigma must be positive");
  const int margin = resolved_border_margin(cfg, height, width);
  if (margin < 0 || 2 * margin >= std::min(height, width)) {
    throw ContractError("border margin must satisfy 0 <= margin < min(H, W) / 2");
  }
  if (!(cfg.window_frac > 0.0 && cfg.window_frac <= 0.5)) throw ContractError("window_frac must be in (0, 0.5]");
  if (!(cfg.walk_step > 0.0)) throw ContractError("walk step must be positive");
}

ActivationMap min_max_normalize(const ActivationMap& map) {
  validate(map);
  const auto [lo, hi] = std::minmax_element(map.data.begin(), map.data.end());
  ActivationMap out(map.height, map.width, 0.0);
  if (*hi > *lo) {
    const double range = *hi - *lo;
    const double lo_v = *lo;
    for (std::size_t i = 0; i < map.data.size(); ++i) out.data[i] = (map.data[i] - lo_v) / range;
  }
  return out;
}

ActivationMap normalize_map(const ActivationMap& map, double tau) {
  if (!(tau > 0.0)) throw DomainError("softmax temperature must be positive");
  ActivationMap out = min_max_normalize(map);
  const double peak = *std::max_element(out.data.begin(), out.data.end()) / tau;
  double total = 0.0;
  for (double& v : out.data) {
    v = std::exp(v / tau - peak);
    total += v;
  }
  for (double& v : out.data) v /= total;
  return out;
}

StartSamples sample_starts(const ActivationMap& probabilities, int n, const SamplerConfig& cfg,
                           std::uint64_t seed) {
  if (n < 1) throw DomainError("must sample at least one start point");
  validate(probabilities);
  validate(cfg, probabilities.height, probabilities.width);
  const int h = probabilities.height, w = probabilities.width;
  const int margin = resolved_border_margin(cfg, h, w);

  ActivationMap work = probabilities;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (r < margin || r >= h - margin || c < margin || c >= w - margin) work.at(r, c) = 0.0;
    }
  }

  const double inv_two_sigma2 = 1.0 / (2.0 * cfg.suppression_sigma * cfg.suppression_sigma);
  StartSamples out;
  std::mt19937_64 rng(seed);
  for (int pick = 0; pick < n; ++pick) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < work.data.size(); ++i) {
      if (work.data[i] > work.data[best]) best = i;
    }
    const double peak = work.data[best];
    if (!(peak > 0.0)) {
      const auto rows = static_cast<std::uint64_t>(h - 2 * margin);
      const auto cols = static_cast<std::uint64_t>(w - 2 * margin);
      const auto idx = uniform_index(rng, rows * cols);
      out.points.push_back({margin + static_cast<int>(idx / cols), margin + static_cast<int>(idx % cols)});
      ++out.random_fill;
      continue;
    }
    const PixelCoord at{static_cast<int>(best / w), static_cast<int>(best % w)};
    out.points.push_back(at);
    for (int r = 0; r < h; ++r) {
      const double dy = r - at.row;
      for (int c = 0; c < w; ++c) {
        const double dx = c - at.col;
        double& v = work.at(r, c);
        v = std::max(0.0, v - peak * std::exp(-(dx * dx + dy * dy) * inv_two_sigma2));
      }
    }
    work.data[best] = 0.0;
  }
  return out;
}

CubicBezierStroke tangent_walk(const ActivationMap& map, Point2 start, int k, const SamplerConfig& cfg) {
  if (k != 4) throw DomainError("tangent walk builds cubic strokes only (k = 4)");
  validate(map);
  validate(cfg, map.height, map.width);
  const Box canvas{0.0, map.width - 1.0, 0.0, map.height - 1.0};
  if (!is_finite(start) || !canvas.contains(start)) throw DomainError("tangent walk start lies outside the canvas");

  const GradientField grad = central_gradient(map);
  const double half = 0.5 * window_side(cfg, map.height, map.width);
  const std::size_t max_steps = static_cast<std::size_t>(std::ceil(16.0 * half / cfg.walk_step)) + 1;

  CubicBezierStroke stroke;
  stroke.points[0] = start;
  Point2 pos = start;
  std::optional<Point2> previous;

  for (int point = 1; point < k; ++point) {
    const Box window{std::max(canvas.x0, pos.x - half), std::min(canvas.x1, pos.x + half),
                     std::max(canvas.y0, pos.y - half), std::min(canvas.y1, pos.y + half)};
    for (std::size_t step = 0; step < max_steps; ++step) {
      const Point2 g = sample_gradient(grad, pos);
      const double gn = norm(g);
      Point2 dir;
      if (gn > 1e-12) {
        // +90 degree rotation of the gradient; the sign is fixed below.
        const Point2 tangent{-g.y / gn, g.x / gn};
        if (previous) {
          dir = dot(tangent, *previous) >= 0.0 ? tangent : -1.0 * tangent;
        } else {
          const double fwd = window.exit_distance(pos, tangent);
          const double back = window.exit_distance(pos, -1.0 * tangent);
          dir = back > fwd + 1e-9 ? -1.0 * tangent : tangent;
        }
      } else {
        dir = previous.value_or(Point2{1.0, 0.0});
      }
      const Point2 next = pos + cfg.walk_step * dir;
      if (!window.contains(next)) break;
      pos = next;
      previous = dir;
    }
    stroke.points[static_cast<std::size_t>(point)] = pos;
  }
  return stroke;
}

ActivationMap resize_map(const ActivationMap& map, int height, int width) {
  if (map.height == height && map.width == width) return map;
  ActivationMap out(height, width);
  const double sy = static_cast<double>(map.height) / height;
  const double sx = static_cast<double>(map.width) / width;
  for (int r = 0; r < height; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, map.height - 1.0);
    const int r0 = static_cast<int>(std::floor(y));
    const int r1 = std::min(r0 + 1, map.height - 1);
    const double wy = y - r0;
    for (int c = 0; c < width; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, map.width - 1.0);
      const int c0 = static_cast<int>(std::floor(x));
      const int c1 = std::min(c0 + 1, map.width - 1);
      const double wx = x - c0;
      out.at(r, c) = (1 - wy) * ((1 - wx) * map.at(r0, c0) + wx * map.at(r0, c1)) +
                     wy * ((1 - wx) * map.at(r1, c0) + wx * map.at(r1, c1));
    }
  }
  return out;
}

VectorSketch init_sketch(const ActivationMap& map, const SketchSpec& spec, const SamplerConfig& cfg,
                         std::uint64_t seed) {
  validate(spec);
  const ActivationMap fitted = resize_map(map, spec.canvas.height, spec.canvas.width);
  validate(cfg, fitted.height, fitted.width);
  const ActivationMap normalized = min_max_normalize(fitted);
  const ActivationMap probabilities = normalize_map(fitted, cfg.temperature);
  const StartSamples starts = sample_starts(probabilities, spec.n_strokes, cfg, seed);
  const ActivationMap& walk_map = cfg.walk_on_normalized_map ? normalized : probabilities;

  VectorSketch sketch;
  sketch.canvas = spec.canvas;
  sketch.stroke_width = spec.stroke_width;
  sketch.strokes.reserve(starts.points.size());
  for (const PixelCoord& p : starts.points) {
    sketch.strokes.push_back(tangent_walk(walk_map, p.center(), spec.k_points, cfg));
  }
  return sketch;
}

}  // namespace glyphforge
