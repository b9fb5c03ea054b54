#include "glyphforge/geometry.hpp"

#include <cmath>
#include <string>

#include "glyphforge/errors.hpp"

namespace glyphforge {

double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }

double norm(Point2 p) { return std::hypot(p.x, p.y); }

bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

void validate(const VectorSketch& sketch) {
  if (sketch.strokes.empty()) throw ContractError("sketch has no strokes");
  if (!(sketch.stroke_width > 0.0) || !std::isfinite(sketch.stroke_width)) {
    throw ContractError("stroke width must be positive");
  }
  if (sketch.canvas.height <= 0 || sketch.canvas.width <= 0) {
    throw ContractError("canvas dimensions must be positive");
  }
  for (std::size_t i = 0; i < sketch.strokes.size(); ++i) {
    for (const Point2& p : sketch.strokes[i].points) {
      if (!is_finite(p)) throw ContractError("stroke " + std::to_string(i) + " has a non-finite point");
    }
  }
}

void validate(const SketchSpec& spec) {
  if (spec.n_strokes < 1 || spec.n_strokes > 1024) throw ContractError("n_strokes must be in 1..1024");
  if (spec.k_points != 4) throw ContractError("only cubic strokes (k = 4) are supported");
  if (spec.canvas.height <= 0 || spec.canvas.width <= 0) throw ContractError("canvas dimensions must be positive");
  if (!(spec.stroke_width > 0.0)) throw ContractError("stroke width must be positive");
}

std::array<double, 4> bernstein_weights(double t) {
  const double s = 1.0 - t;
  return {s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t};
}

Point2 eval_bezier(const CubicBezierStroke& stroke, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("bezier parameter outside [0, 1]");
  if (t == 0.0) return stroke.points[0];
  if (t == 1.0) return stroke.points[3];
  const auto w = bernstein_weights(t);
  Point2 out;
  for (std::size_t k = 0; k < 4; ++k) {
    out.x += w[k] * stroke.points[k].x;
    out.y += w[k] * stroke.points[k].y;
  }
  return out;
}

std::vector<Point2> flatten(const CubicBezierStroke& stroke, std::size_t samples) {
  if (samples < 2) throw DomainError("flatten needs at least 2 samples");
  std::vector<Point2> out(samples);
  const double denom = static_cast<double>(samples - 1);
  for (std::size_t i = 0; i < samples; ++i) {
    out[i] = eval_bezier(stroke, static_cast<double>(i) / denom);
  }
  return out;
}

CubicBezierStroke transform(const Affine2& map, const CubicBezierStroke& stroke) {
  CubicBezierStroke out;
  for (std::size_t k = 0; k < 4; ++k) out.points[k] = map(stroke.points[k]);
  return out;
}

}  // namespace glyphforge
