#include "glyphforge/encoder.hpp"

#include <cmath>

#include "glyphforge/bridge.hpp"
#include "glyphforge/errors.hpp"

namespace glyphforge {

Embedding Encoder::embed_image(const RasterImage&) {
  throw CapabilityError(descriptor().name + " does not embed images");
}

ActivationMap Encoder::activation_map(const RasterImage&, CanvasSize) {
  throw CapabilityError(descriptor().name + " does not produce activation maps");
}

LossGradResult Encoder::loss_and_grad(const RasterImage&, const Embedding&) {
  throw CapabilityError(descriptor().name + " does not provide loss gradients");
}

Embedding Encoder::embed_text(const std::string&) {
  throw CapabilityError(descriptor().name + " does not embed text");
}

std::unique_ptr<Encoder> make_encoder(const std::string& selector) {
  if (selector == "builtin-semantic") return std::make_unique<BuiltinEncoder>(EncoderKind::builtin_semantic);
  if (selector == "builtin-perceptual") return std::make_unique<BuiltinEncoder>(EncoderKind::builtin_perceptual);
  constexpr std::string_view prefix = "bridge:";
  if (selector.rfind(prefix, 0) == 0 && selector.size() > prefix.size()) {
    return std::make_unique<BridgeEncoder>(selector.substr(prefix.size()));
  }
  throw ContractError("unknown encoder selector '" + selector +
                      "' (expected builtin-semantic, builtin-perceptual or bridge:<address>)");
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractError("vector dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

}  // namespace glyphforge

#include <algorithm>

#include "glyphforge/rng.hpp"

namespace glyphforge {

EncoderGradcheckReport encoder_gradcheck(Encoder& encoder, const RasterImage& image, const Embedding& target,
                                         std::size_t samples, std::uint64_t seed, double step,
                                         double rel_tolerance, double fd_floor) {
  if (samples == 0) throw DomainError("encoder gradcheck needs at least one sample");
  const LossGradResult analytic = encoder.loss_and_grad(image, target);
  std::mt19937_64 rng(seed);
  EncoderGradcheckReport report;
  RasterImage probe = image;
  // Forward-only loss, independent of the analytic backward pass.
  const auto loss = [&](const RasterImage& img) {
    const Embedding e = encoder.embed_image(img);
    if (e.degenerate) return 1.0;
    const double n = l2_norm(target.values);
    return n == 0.0 ? 1.0 : 1.0 - dot(e.values, target.values) / (l2_norm(e.values) * n);
  };
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t i = uniform_index(rng, image.data.size());
    const double saved = probe.data[i];
    probe.data[i] = saved + step;
    const double plus = loss(probe);
    probe.data[i] = saved - step;
    const double minus = loss(probe);
    probe.data[i] = saved;
    ++report.sampled;
    const double fd = (plus - minus) / (2.0 * step);
    if (!(std::abs(fd) > fd_floor)) continue;
    const double rel = std::abs(analytic.pixel_grad.data[i] - fd) / std::abs(fd);
    ++report.checked;
    if (rel <= rel_tolerance) ++report.passed;
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  report.pass_fraction =
      report.checked == 0 ? 1.0 : static_cast<double>(report.passed) / static_cast<double>(report.checked);
  return report;
}

}  // namespace glyphforge
