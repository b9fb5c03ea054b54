#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "glyphforge/encoder.hpp"
#include "glyphforge/raster.hpp"
#include "glyphforge/stroke_init.hpp"

namespace glyphforge {

enum class UpdateRule { adam, gradient_descent };

struct OptimizeConfig {
  std::size_t iterations = 1500;
  double step_size = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t checkpoint_every = 250;
  std::uint64_t seed = 0;
  UpdateRule rule = UpdateRule::adam;
};

void validate(const OptimizeConfig& cfg);

struct Checkpoint {
  std::size_t iteration = 0;
  VectorSketch sketch;
};

struct OptimizeTrace {
  /// losses[i] is the loss of the sketch after i updates; size = iterations + 1.
  std::vector<double> losses;
  std::vector<Checkpoint> checkpoints;
  bool degenerate_target = false;
  std::vector<std::string> warnings;
};

struct OptimizeResult {
  VectorSketch sketch;
  OptimizeTrace trace;
};

/// Gradient descent on control points against loss = 1 - cos(embed(render(sketch)), embed(image)).
/// The target embedding is computed once. Points are clamped to the canvas after every step.
OptimizeResult optimize(const VectorSketch& init, const RasterImage& image, Encoder& encoder,
                        const RasterConfig& raster_cfg, const OptimizeConfig& opt_cfg);

struct PipelineConfig {
  SketchSpec spec;
  SamplerConfig sampler;
  RasterConfig raster;
  OptimizeConfig optimize;
};

struct PipelineResult {
  VectorSketch initial;
  VectorSketch sketch;
  OptimizeTrace trace;
};

/// activation_map -> init_sketch -> optimize. The input is resampled to the canvas first.
PipelineResult full_pipeline(const RasterImage& image, Encoder& encoder, const PipelineConfig& cfg);

/// "iteration loss" rows, one per trace entry.
std::string format_trace(const OptimizeTrace& trace);

/// Writes sketch.svg, sketch.png, init.svg, trace.txt and checkpoint_<iter>.svg into dir.
void write_pipeline_artifacts(const PipelineResult& result, const RasterConfig& raster_cfg,
                              const std::filesystem::path& dir);

}  // namespace glyphforge
