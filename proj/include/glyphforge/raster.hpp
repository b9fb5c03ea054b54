#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "glyphforge/geometry.hpp"
#include "glyphforge/image.hpp"

namespace glyphforge {

struct RasterConfig {
  std::size_t flatten_samples = 64;
  double aa_halfwidth = 1.0;
  int channels = 3;
};

void validate(const RasterConfig& cfg);

/// dLoss/dP for every control point of every stroke.
struct ControlPointGrad {
  std::vector<std::array<Point2, 4>> strokes;
};

/// Smoothstep coverage of one stroke at distance d from its centerline.
/// u = clamp((w/2 + a - d) / 2a, 0, 1), alpha = 3u^2 - 2u^3.
double stroke_coverage(double distance, double stroke_width, double aa_halfwidth);

/// Transparency-product compositing: v(x) = prod_j (1 - alpha_j(x)), replicated across channels.
RasterImage render(const VectorSketch& sketch, const RasterConfig& cfg);

/// Chain rule from per-pixel loss gradients to control points. Nearest-segment
/// ties resolve to the lowest segment index.
ControlPointGrad backward(const VectorSketch& sketch, const RasterConfig& cfg, const PixelGrad& pixel_grad);

struct GradcheckReport {
  double max_rel_error = 0.0;
  double median_rel_error = 0.0;
  double pass_fraction = 0.0;
  std::size_t checked = 0;  // coordinates with |FD| above the floor
  std::size_t passed = 0;
};

struct GradcheckOptions {
  double step = 1e-3;
  double rel_tolerance = 1e-2;
  double fd_floor = 1e-6;
};

/// Compares backward() against central finite differences of
/// L = sum(pixel_grad * render). Each trial draws a fresh uniform [-1, 1]
/// pixel gradient from the seed.
GradcheckReport gradcheck(const VectorSketch& sketch, const RasterConfig& cfg, std::size_t trials,
                          std::uint64_t seed, const GradcheckOptions& options = {});

/// Merges per-coordinate relative errors from several reports' raw samples.
GradcheckReport summarize_rel_errors(std::vector<double> rel_errors, double rel_tolerance);

/// Relative errors of every checked coordinate; the building block of gradcheck.
std::vector<double> gradcheck_rel_errors(const VectorSketch& sketch, const RasterConfig& cfg,
                                         std::size_t trials, std::uint64_t seed,
                                         const GradcheckOptions& options = {});

/// n strokes with control points uniform over the canvas.
VectorSketch random_sketch(std::mt19937_64& rng, int n_strokes, CanvasSize canvas, double stroke_width = 3.0);

}  // namespace glyphforge
