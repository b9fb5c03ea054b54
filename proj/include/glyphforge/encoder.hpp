#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glyphforge/geometry.hpp"
#include "glyphforge/image.hpp"
#include "glyphforge/stroke_init.hpp"

namespace glyphforge {

struct Embedding {
  std::string id;
  std::optional<std::string> category;
  std::vector<double> values;
  /// Set when the encoder produced an all-zero feature vector.
  bool degenerate = false;
};

enum class EncoderKind { builtin_semantic, builtin_perceptual, bridge };

/// Bit values match the bridge "describe" capability mask (bit = opcode - 1).
enum class Capability : std::uint8_t {
  embed_image = 1u << 0,
  activation_map = 1u << 1,
  loss_grad = 1u << 2,
  embed_text = 1u << 3,
};

struct EncoderDescriptor {
  std::string name;
  EncoderKind kind = EncoderKind::builtin_semantic;
  std::size_t embedding_dim = 0;
  std::uint8_t capabilities = 0;

  bool has(Capability c) const { return (capabilities & static_cast<std::uint8_t>(c)) != 0; }
};

struct LossGradResult {
  double loss = 1.0;
  PixelGrad pixel_grad;
  bool degenerate = false;
};

/// The image -> embedding map used as the semantic constraint, plus the
/// activation map that seeds stroke placement. Operations a concrete encoder
/// does not serve throw CapabilityError.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual const EncoderDescriptor& descriptor() const = 0;

  virtual Embedding embed_image(const RasterImage& image);
  /// Nonnegative map resampled bilinearly to the requested canvas.
  virtual ActivationMap activation_map(const RasterImage& image, CanvasSize canvas);
  /// loss = 1 - cos(embed(image), target) and d(loss)/d(pixels). A zero
  /// embedding on either side yields loss 1, zero gradient and the degenerate flag.
  virtual LossGradResult loss_and_grad(const RasterImage& image, const Embedding& target);
  virtual Embedding embed_text(const std::string& text);
};

/// Input side of the builtin encoders.
inline constexpr int kEncoderInputSize = 224;

/// Deterministic analytic encoder built from a derivative-of-Gaussian filter bank.
///
/// Grayscale (channel mean) at 224 x 224 is filtered at orientations
/// {0, 45, 90, 135} degrees and scales sigma in {2, 4} px with half-sample
/// reflective padding. Response magnitudes are average pooled:
///  - semantic: 7 x 7 grid per (scale, orientation) map, 392 dims;
///  - perceptual: 14 x 14 grid per orientation, scales summed, 784 dims.
/// The feature vector is L2 normalized.
class BuiltinEncoder final : public Encoder {
 public:
  explicit BuiltinEncoder(EncoderKind kind);

  const EncoderDescriptor& descriptor() const override { return descriptor_; }
  Embedding embed_image(const RasterImage& image) override;
  ActivationMap activation_map(const RasterImage& image, CanvasSize canvas) override;
  LossGradResult loss_and_grad(const RasterImage& image, const Embedding& target) override;

  /// Pooled magnitudes before normalization.
  std::vector<double> raw_features(const RasterImage& image) const;

  int grid() const noexcept { return grid_; }
  static constexpr int kOrientations = 4;
  static constexpr int kScales = 2;

 private:
  EncoderDescriptor descriptor_;
  int grid_;
  bool sum_scales_;
};

/// "builtin-semantic", "builtin-perceptual" or "bridge:<address>" (see BridgeEncoder).
std::unique_ptr<Encoder> make_encoder(const std::string& selector);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double l2_norm(const std::vector<double>& v);

}  // namespace glyphforge

namespace glyphforge {

struct EncoderGradcheckReport {
  std::size_t sampled = 0;
  std::size_t checked = 0;  // sampled pixels with |FD| above the floor
  std::size_t passed = 0;
  double max_rel_error = 0.0;
  double pass_fraction = 1.0;
};

/// Central finite differences of loss_and_grad over randomly sampled pixel values.
/// Pixels are perturbed by +-step, so image values must stay inside [step, 1 - step].
EncoderGradcheckReport encoder_gradcheck(Encoder& encoder, const RasterImage& image, const Embedding& target,
                                         std::size_t samples, std::uint64_t seed, double step = 1e-3,
                                         double rel_tolerance = 1e-2, double fd_floor = 1e-7);

}  // namespace glyphforge
