#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "glyphforge/geometry.hpp"

namespace glyphforge {

/// Row-major H x W scalar field. Also used for the softmax probability map.
struct ActivationMap {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  ActivationMap() = default;
  ActivationMap(int h, int w, double fill = 0.0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
};

/// Throws ContractError unless values are finite and nonnegative. A map
/// without any positive value is accepted; it normalizes to a uniform distribution.
void validate(const ActivationMap& map);

struct PixelCoord {
  int row = 0;
  int col = 0;

  Point2 center() const { return {static_cast<double>(col), static_cast<double>(row)}; }
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct SamplerConfig {
  double temperature = 0.3;
  double suppression_sigma = 5.0;
  /// Pixels excluded along each edge; unset means 2% of the smaller canvas side.
  std::optional<int> border_margin;
  double window_frac = 0.10;
  double walk_step = 1.0;
  /// Walk the min-max normalized map (true) or the softmax probabilities (false).
  bool walk_on_normalized_map = true;
};

/// Throws ContractError for an invalid config on an H x W canvas.
void validate(const SamplerConfig& cfg, int height, int width);
int resolved_border_margin(const SamplerConfig& cfg, int height, int width);
int window_side(const SamplerConfig& cfg, int height, int width);

/// (m - min) / (max - min), or all zeros for a constant map.
ActivationMap min_max_normalize(const ActivationMap& map);

/// Min-max normalization followed by a softmax at temperature tau over all pixels.
ActivationMap normalize_map(const ActivationMap& map, double tau);

struct StartSamples {
  std::vector<PixelCoord> points;  // selection order
  std::size_t random_fill = 0;     // trailing picks drawn uniformly after candidates ran out
};

/// Greedy global-maximum sampling with Gaussian suppression.
StartSamples sample_starts(const ActivationMap& probabilities, int n, const SamplerConfig& cfg,
                           std::uint64_t seed);

/// Places k - 1 further control points by walking along iso-contours of the map.
CubicBezierStroke tangent_walk(const ActivationMap& map, Point2 start, int k, const SamplerConfig& cfg);

/// normalize -> sample_starts -> tangent_walk per start.
VectorSketch init_sketch(const ActivationMap& map, const SketchSpec& spec, const SamplerConfig& cfg,
                         std::uint64_t seed);

/// Bilinear resampling with pixel-center alignment.
ActivationMap resize_map(const ActivationMap& map, int height, int width);

}  // namespace glyphforge
