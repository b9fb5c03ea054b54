#include "glyphforge/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "glyphforge/errors.hpp"
#include "glyphforge/image_io.hpp"
#include "glyphforge/svg.hpp"

namespace glyphforge {
namespace {

void clamp_to_canvas(VectorSketch& sketch) {
  const double xmax = sketch.canvas.width - 1.0;
  const double ymax = sketch.canvas.height - 1.0;
  for (auto& stroke : sketch.strokes) {
    for (auto& p : stroke.points) {
      p.x = std::clamp(p.x, 0.0, xmax);
      p.y = std::clamp(p.y, 0.0, ymax);
    }
  }
}

bool finite_grad(const ControlPointGrad& g) {
  for (const auto& stroke : g.strokes) {
    for (const Point2& p : stroke) {
      if (!is_finite(p)) return false;
    }
  }
  return true;
}

bool finite_pixels(const PixelGrad& g) {
  return std::all_of(g.data.begin(), g.data.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

void validate(const OptimizeConfig& cfg) {
  if (cfg.iterations < 1) throw ContractError("iterations must be >= 1");
  if (!(cfg.step_size > 0.0)) throw ContractError("step size must be positive");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw ContractError("moment decay parameters must be in [0, 1)");
  }
  if (!(cfg.epsilon > 0.0)) throw ContractError("epsilon must be positive");
  if (cfg.checkpoint_every < 1) throw ContractError("checkpoint_every must be >= 1");
}

OptimizeResult optimize(const VectorSketch& init, const RasterImage& image, Encoder& encoder,
                        const RasterConfig& raster_cfg, const OptimizeConfig& opt_cfg) {
  validate(init);
  validate(raster_cfg);
  validate(opt_cfg);
  if (!encoder.descriptor().has(Capability::embed_image) || !encoder.descriptor().has(Capability::loss_grad)) {
    throw CapabilityError(encoder.descriptor().name + " cannot drive sketch optimization");
  }

  OptimizeResult result;
  result.sketch = init;
  clamp_to_canvas(result.sketch);
  OptimizeTrace& trace = result.trace;

  const Embedding target = encoder.embed_image(image);
  if (target.degenerate) {
    trace.degenerate_target = true;
    trace.warnings.push_back("target image has a degenerate (all-zero) embedding; sketch left at its initialization");
    trace.losses.assign(opt_cfg.iterations + 1, 1.0);
    result.sketch = init;
    trace.checkpoints.push_back({0, init});
    return result;
  }

  const std::size_t n_coords = result.sketch.strokes.size() * 8;
  std::vector<double> m(n_coords, 0.0), v(n_coords, 0.0);
  trace.losses.reserve(opt_cfg.iterations + 1);

  for (std::size_t it = 0; it <= opt_cfg.iterations; ++it) {
    const RasterImage rendered = render(result.sketch, raster_cfg);
    const LossGradResult lg = encoder.loss_and_grad(rendered, target);
    if (!std::isfinite(lg.loss) || !finite_pixels(lg.pixel_grad)) {
      throw OptimizationError(it, "non-finite loss or pixel gradient");
    }
    trace.losses.push_back(lg.loss);
    if (it % opt_cfg.checkpoint_every == 0 || it == opt_cfg.iterations) {
      trace.checkpoints.push_back({it, result.sketch});
    }
    if (it == opt_cfg.iterations) break;

    const ControlPointGrad grad = backward(result.sketch, raster_cfg, lg.pixel_grad);
    if (!finite_grad(grad)) throw OptimizationError(it, "non-finite control point gradient");

    const double t = static_cast<double>(it + 1);
    const double bias1 = 1.0 - std::pow(opt_cfg.beta1, t);
    const double bias2 = 1.0 - std::pow(opt_cfg.beta2, t);
    std::size_t k = 0;
    for (std::size_t j = 0; j < result.sketch.strokes.size(); ++j) {
      for (std::size_t p = 0; p < 4; ++p) {
        for (int axis = 0; axis < 2; ++axis, ++k) {
          const double g = axis == 0 ? grad.strokes[j][p].x : grad.strokes[j][p].y;
          double& coord = axis == 0 ? result.sketch.strokes[j].points[p].x : result.sketch.strokes[j].points[p].y;
          if (opt_cfg.rule == UpdateRule::gradient_descent) {
            coord -= opt_cfg.step_size * g;
            continue;
          }
          m[k] = opt_cfg.beta1 * m[k] + (1.0 - opt_cfg.beta1) * g;
          v[k] = opt_cfg.beta2 * v[k] + (1.0 - opt_cfg.beta2) * g * g;
          const double mhat = m[k] / bias1;
          const double vhat = v[k] / bias2;
          coord -= opt_cfg.step_size * mhat / (std::sqrt(vhat) + opt_cfg.epsilon);
        }
      }
    }
    clamp_to_canvas(result.sketch);
  }
  return result;
}

PipelineResult full_pipeline(const RasterImage& image, Encoder& encoder, const PipelineConfig& cfg) {
  validate(cfg.spec);
  validate(image);
  const RasterImage fitted = resize_bilinear(image, cfg.spec.canvas.height, cfg.spec.canvas.width);
  const ActivationMap map = encoder.activation_map(fitted, cfg.spec.canvas);

  PipelineResult out;
  out.initial = init_sketch(map, cfg.spec, cfg.sampler, cfg.optimize.seed);
  OptimizeResult opt = optimize(out.initial, fitted, encoder, cfg.raster, cfg.optimize);
  out.sketch = std::move(opt.sketch);
  out.trace = std::move(opt.trace);
  return out;
}

std::string format_trace(const OptimizeTrace& trace) {
  std::string out = "# iteration loss\n";
  char line[64];
  for (std::size_t i = 0; i < trace.losses.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu %.17g\n", i, trace.losses[i]);
    out += line;
  }
  return out;
}

void write_pipeline_artifacts(const PipelineResult& result, const RasterConfig& raster_cfg,
                              const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_svg(result.initial, dir / "init.svg");
  write_svg(result.sketch, dir / "sketch.svg");
  write_png(render(result.sketch, raster_cfg), dir / "sketch.png");
  write_file_atomic(dir / "trace.txt", format_trace(result.trace));
  for (const Checkpoint& cp : result.trace.checkpoints) {
    write_svg(cp.sketch, dir / ("checkpoint_" + std::to_string(cp.iteration) + ".svg"));
  }
}

}  // namespace glyphforge
