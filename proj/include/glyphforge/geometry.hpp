#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace glyphforge {

/// Continuous pixel coordinates. The origin is the center of the top-left pixel,
/// so pixel (row r, column c) is centered at (x = c, y = r).
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(const Point2&, const Point2&) = default;
};

double dot(Point2 a, Point2 b);
double norm(Point2 p);
bool is_finite(Point2 p);

struct CanvasSize {
  int height = 224;
  int width = 224;

  friend bool operator==(const CanvasSize&, const CanvasSize&) = default;
};

/// Cubic Bezier stroke with control points P0..P3.
struct CubicBezierStroke {
  static constexpr std::size_t kPoints = 4;
  std::array<Point2, kPoints> points{};

  friend bool operator==(const CubicBezierStroke&, const CubicBezierStroke&) = default;
};

/// N black strokes of one fixed width on a white canvas.
struct VectorSketch {
  std::vector<CubicBezierStroke> strokes;
  double stroke_width = 3.0;
  CanvasSize canvas;

  friend bool operator==(const VectorSketch&, const VectorSketch&) = default;
};

struct SketchSpec {
  int n_strokes = 16;
  int k_points = 4;
  CanvasSize canvas{224, 224};
  double stroke_width = 3.0;
};

/// Throws ContractError when any invariant of the sketch is broken.
void validate(const VectorSketch& sketch);
void validate(const SketchSpec& spec);

/// Bernstein basis weights of a cubic at t.
std::array<double, 4> bernstein_weights(double t);

/// Point on the curve at t in [0,1]; throws DomainError otherwise.
Point2 eval_bezier(const CubicBezierStroke& stroke, double t);

/// T >= 2 samples at t = i / (T - 1). Endpoints are exactly P0 and P3.
std::vector<Point2> flatten(const CubicBezierStroke& stroke, std::size_t samples);

/// 2x3 affine map p -> A p + b.
struct Affine2 {
  double a = 1.0, b = 0.0, tx = 0.0;
  double c = 0.0, d = 1.0, ty = 0.0;

  Point2 operator()(Point2 p) const { return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty}; }
};

CubicBezierStroke transform(const Affine2& map, const CubicBezierStroke& stroke);

}  // namespace glyphforge
