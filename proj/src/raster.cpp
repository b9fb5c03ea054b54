#include "glyphforge/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glyphforge/errors.hpp"
#include "glyphforge/rng.hpp"

namespace glyphforge {
namespace {

/// Nearest-segment distance field of one flattened stroke, restricted to the
/// stroke's bounding box inflated by the coverage cutoff.
struct StrokeField {
  int r0 = 0, c0 = 0, rows = 0, cols = 0;
  std::vector<double> dist;
  std::vector<int> segment;
  std::vector<double> param;

  std::size_t local(int r, int c) const { return static_cast<std::size_t>(r - r0) * cols + (c - c0); }
};

// Inclusive integer pixel-center range covering [lo, hi], clipped to [0, extent).
bool pixel_range(double lo, double hi, int extent, int& first, int& last) {
  lo = std::max(lo, 0.0);
  hi = std::min(hi, static_cast<double>(extent - 1));
  if (!(lo <= hi)) return false;
  first = static_cast<int>(std::ceil(lo));
  last = static_cast<int>(std::floor(hi));
  return first <= last;
}

StrokeField distance_field(const std::vector<Point2>& poly, double cutoff, CanvasSize canvas) {
  StrokeField f;
  double minx = poly[0].x, maxx = poly[0].x, miny = poly[0].y, maxy = poly[0].y;
  for (const Point2& p : poly) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  int r1 = 0, c1 = 0;
  if (!pixel_range(minx - cutoff, maxx + cutoff, canvas.width, f.c0, c1) ||
      !pixel_range(miny - cutoff, maxy + cutoff, canvas.height, f.r0, r1)) {
    return f;
  }
  f.rows = r1 - f.r0 + 1;
  f.cols = c1 - f.c0 + 1;
  const std::size_t n = static_cast<std::size_t>(f.rows) * f.cols;
  f.dist.assign(n, std::numeric_limits<double>::infinity());
  f.segment.assign(n, -1);
  f.param.assign(n, 0.0);

  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const Point2 a = poly[i];
    const Point2 b = poly[i + 1];
    int sc0 = 0, sc1 = 0, sr0 = 0, sr1 = 0;
    if (!pixel_range(std::min(a.x, b.x) - cutoff, std::max(a.x, b.x) + cutoff, canvas.width, sc0, sc1) ||
        !pixel_range(std::min(a.y, b.y) - cutoff, std::max(a.y, b.y) + cutoff, canvas.height, sr0, sr1)) {
      continue;
    }
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    for (int r = sr0; r <= sr1; ++r) {
      for (int c = sc0; c <= sc1; ++c) {
        const Point2 x{static_cast<double>(c), static_cast<double>(r)};
        double s = 0.0;
        if (len2 > 0.0) s = std::clamp(dot(x - a, ab) / len2, 0.0, 1.0);
        const Point2 q = a + s * ab;
        const double d = norm(x - q);
        const std::size_t k = f.local(r, c);
        if (d < f.dist[k]) {
          f.dist[k] = d;
          f.segment[k] = static_cast<int>(i);
          f.param[k] = s;
        }
      }
    }
  }
  return f;
}

double raw_u(double distance, double stroke_width, double aa_halfwidth) {
  return (0.5 * stroke_width + aa_halfwidth - distance) / (2.0 * aa_halfwidth);
}

double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }

// Single-channel transparency product.
std::vector<double> composite(const VectorSketch& sketch, const RasterConfig& cfg) {
  const CanvasSize canvas = sketch.canvas;
  std::vector<double> value(static_cast<std::size_t>(canvas.height) * canvas.width, 1.0);
  const double cutoff = 0.5 * sketch.stroke_width + cfg.aa_halfwidth;
  for (const auto& stroke : sketch.strokes) {
    const StrokeField f = distance_field(flatten(stroke, cfg.flatten_samples), cutoff, canvas);
    for (int r = f.r0; r < f.r0 + f.rows; ++r) {
      for (int c = f.c0; c < f.c0 + f.cols; ++c) {
        const double d = f.dist[f.local(r, c)];
        if (!(d < cutoff)) continue;
        const double alpha = stroke_coverage(d, sketch.stroke_width, cfg.aa_halfwidth);
        value[static_cast<std::size_t>(r) * canvas.width + c] *= 1.0 - alpha;
      }
    }
  }
  return value;
}

}  // namespace

void validate(const RasterConfig& cfg) {
  if (cfg.flatten_samples < 2) throw ContractError("flatten_samples must be >= 2");
  if (!(cfg.aa_halfwidth > 0.0)) throw ContractError("aa_halfwidth must be positive");
  if (cfg.channels != 1 && cfg.channels != 3) throw ContractError("channels must be 1 or 3");
}

double stroke_coverage(double distance, double stroke_width, double aa_halfwidth) {
  const double u = std::clamp(raw_u(distance, stroke_width, aa_halfwidth), 0.0, 1.0);
  return smoothstep(u);
}

RasterImage render(const VectorSketch& sketch, const RasterConfig& cfg) {
  validate(sketch);
  validate(cfg);
  const std::vector<double> value = composite(sketch, cfg);
  RasterImage out(sketch.canvas.height, sketch.canvas.width, cfg.channels);
  for (std::size_t i = 0; i < value.size(); ++i) {
    for (int ch = 0; ch < cfg.channels; ++ch) out.data[i * cfg.channels + ch] = value[i];
  }
  return out;
}

ControlPointGrad backward(const VectorSketch& sketch, const RasterConfig& cfg, const PixelGrad& pixel_grad) {
  validate(sketch);
  validate(cfg);
  if (pixel_grad.height != sketch.canvas.height || pixel_grad.width != sketch.canvas.width ||
      pixel_grad.channels != cfg.channels ||
      pixel_grad.data.size() != static_cast<std::size_t>(pixel_grad.height) * pixel_grad.width * pixel_grad.channels) {
    throw ContractError("pixel gradient shape does not match the rendered image");
  }

  const CanvasSize canvas = sketch.canvas;
  const std::size_t n_pixels = static_cast<std::size_t>(canvas.height) * canvas.width;
  std::vector<double> g(n_pixels, 0.0);
  for (std::size_t i = 0; i < n_pixels; ++i) {
    for (int ch = 0; ch < cfg.channels; ++ch) g[i] += pixel_grad.data[i * cfg.channels + ch];
  }
  const std::vector<double> value = composite(sketch, cfg);

  const double w = sketch.stroke_width;
  const double a = cfg.aa_halfwidth;
  const double cutoff = 0.5 * w + a;
  const std::size_t samples = cfg.flatten_samples;
  std::vector<std::array<double, 4>> basis(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    basis[i] = bernstein_weights(static_cast<double>(i) / static_cast<double>(samples - 1));
  }

  ControlPointGrad out;
  out.strokes.assign(sketch.strokes.size(), std::array<Point2, 4>{});
  for (std::size_t j = 0; j < sketch.strokes.size(); ++j) {
    const auto poly = flatten(sketch.strokes[j], samples);
    const StrokeField f = distance_field(poly, cutoff, canvas);
    auto& grad = out.strokes[j];
    for (int r = f.r0; r < f.r0 + f.rows; ++r) {
      for (int c = f.c0; c < f.c0 + f.cols; ++c) {
        const std::size_t k = f.local(r, c);
        const double d = f.dist[k];
        const double u = raw_u(d, w, a);
        if (!(u > 0.0 && u < 1.0) || d <= 0.0) continue;
        const std::size_t pix = static_cast<std::size_t>(r) * canvas.width + c;
        if (g[pix] == 0.0) continue;
        const double alpha = smoothstep(u);
        // v / (1 - alpha_j) is the product of every other stroke's transparency.
        const double others = value[pix] / (1.0 - alpha);
        const double dalpha_du = 6.0 * u * (1.0 - u);
        const double dloss_dd = g[pix] * (-others) * dalpha_du * (-1.0 / (2.0 * a));

        const int seg = f.segment[k];
        const double s = f.param[k];
        const Point2 a0 = poly[seg];
        const Point2 a1 = poly[seg + 1];
        const Point2 q = a0 + s * (a1 - a0);
        const Point2 x{static_cast<double>(c), static_cast<double>(r)};
        const Point2 e = (1.0 / d) * (q - x);
        const auto& b0 = basis[seg];
        const auto& b1 = basis[seg + 1];
        for (std::size_t p = 0; p < 4; ++p) {
          const double weight = dloss_dd * ((1.0 - s) * b0[p] + s * b1[p]);
          grad[p].x += weight * e.x;
          grad[p].y += weight * e.y;
        }
      }
    }
  }
  return out;
}

std::vector<double> gradcheck_rel_errors(const VectorSketch& sketch, const RasterConfig& cfg,
                                         std::size_t trials, std::uint64_t seed,
                                         const GradcheckOptions& options) {
  if (trials == 0) throw DomainError("gradcheck needs at least one trial");
  validate(sketch);
  validate(cfg);
  std::vector<double> rel;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(mix_seed(seed, trial));
    PixelGrad pg(sketch.canvas.height, sketch.canvas.width, cfg.channels);
    for (double& v : pg.data) v = uniform(rng, -1.0, 1.0);

    const auto loss = [&](const VectorSketch& s) {
      const RasterImage img = render(s, cfg);
      double total = 0.0;
      for (std::size_t i = 0; i < img.data.size(); ++i) total += pg.data[i] * img.data[i];
      return total;
    };

    const ControlPointGrad analytic = backward(sketch, cfg, pg);
    VectorSketch probe = sketch;
    for (std::size_t j = 0; j < sketch.strokes.size(); ++j) {
      for (std::size_t p = 0; p < 4; ++p) {
        for (int axis = 0; axis < 2; ++axis) {
          double& coord = axis == 0 ? probe.strokes[j].points[p].x : probe.strokes[j].points[p].y;
          const double saved = coord;
          coord = saved + options.step;
          const double plus = loss(probe);
          coord = saved - options.step;
          const double minus = loss(probe);
          coord = saved;
          const double fd = (plus - minus) / (2.0 * options.step);
          if (!(std::abs(fd) > options.fd_floor)) continue;
          const double an = axis == 0 ? analytic.strokes[j][p].x : analytic.strokes[j][p].y;
          rel.push_back(std::abs(an - fd) / std::abs(fd));
        }
      }
    }
  }
  return rel;
}

GradcheckReport summarize_rel_errors(std::vector<double> rel_errors, double rel_tolerance) {
  GradcheckReport report;
  report.checked = rel_errors.size();
  if (rel_errors.empty()) {
    report.pass_fraction = 1.0;
    return report;
  }
  std::sort(rel_errors.begin(), rel_errors.end());
  report.max_rel_error = rel_errors.back();
  const std::size_t n = rel_errors.size();
  report.median_rel_error =
      n % 2 == 1 ? rel_errors[n / 2] : 0.5 * (rel_errors[n / 2 - 1] + rel_errors[n / 2]);
  report.passed = static_cast<std::size_t>(
      std::upper_bound(rel_errors.begin(), rel_errors.end(), rel_tolerance) - rel_errors.begin());
  report.pass_fraction = static_cast<double>(report.passed) / static_cast<double>(n);
  return report;
}

GradcheckReport gradcheck(const VectorSketch& sketch, const RasterConfig& cfg, std::size_t trials,
                          std::uint64_t seed, const GradcheckOptions& options) {
  return summarize_rel_errors(gradcheck_rel_errors(sketch, cfg, trials, seed, options), options.rel_tolerance);
}

VectorSketch random_sketch(std::mt19937_64& rng, int n_strokes, CanvasSize canvas, double stroke_width) {
  VectorSketch sketch;
  sketch.canvas = canvas;
  sketch.stroke_width = stroke_width;
  sketch.strokes.resize(static_cast<std::size_t>(n_strokes));
  for (auto& stroke : sketch.strokes) {
    for (auto& p : stroke.points) {
      p.x = uniform(rng, 0.0, canvas.width - 1.0);
      p.y = uniform(rng, 0.0, canvas.height - 1.0);
    }
  }
  return sketch;
}

}  // namespace glyphforge
