#include <array>
#include <cmath>
#include <numbers>

#include "glyphforge/encoder.hpp"
#include "glyphforge/errors.hpp"

namespace glyphforge {
namespace {

constexpr std::array<double, 2> kSigmas = {2.0, 4.0};
constexpr std::array<double, 4> kAnglesDeg = {0.0, 45.0, 90.0, 135.0};

struct Plane {
  int height = 0;
  int width = 0;
  std::vector<double> v;

  Plane() = default;
  Plane(int h, int w) : height(h), width(w), v(static_cast<std::size_t>(h) * w, 0.0) {}
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * width + c]; }
};

// Half-sample symmetric reflection: -1 -> 0, n -> n - 1.
int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

/// Taps k[-R..R] stored at k[i + R].
struct Kernel1D {
  int radius = 0;
  std::vector<double> taps;
  bool odd = false;  // k[-i] == -k[i]

  double operator[](int i) const { return taps[static_cast<std::size_t>(i + radius)]; }
};

Kernel1D gaussian(double sigma) {
  Kernel1D k;
  k.radius = static_cast<int>(3.0 * sigma);
  k.taps.resize(static_cast<std::size_t>(2 * k.radius + 1));
  double total = 0.0;
  for (int i = -k.radius; i <= k.radius; ++i) {
    const double g = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k.taps[static_cast<std::size_t>(i + k.radius)] = g;
    total += g;
  }
  for (double& t : k.taps) t /= total;
  return k;
}

Kernel1D gaussian_derivative(double sigma) {
  Kernel1D k = gaussian(sigma);
  for (int i = -k.radius; i <= k.radius; ++i) {
    k.taps[static_cast<std::size_t>(i + k.radius)] *= -static_cast<double>(i) / (sigma * sigma);
  }
  k.odd = true;
  return k;
}

// out[p] = sum_i k[i] in[p + i] along one axis. Odd kernels pair opposite taps so
// that a constant input gives exactly zero.
Plane correlate(const Plane& in, const Kernel1D& k, bool along_x) {
  Plane out(in.height, in.width);
  const int n = along_x ? in.width : in.height;
  for (int r = 0; r < in.height; ++r) {
    for (int c = 0; c < in.width; ++c) {
      const int p = along_x ? c : r;
      const auto sample = [&](int j) {
        j = reflect(j, n);
        return along_x ? in.at(r, j) : in.at(j, c);
      };
      double s = 0.0;
      if (k.odd) {
        for (int i = 1; i <= k.radius; ++i) s += k[i] * (sample(p + i) - sample(p - i));
      } else {
        for (int i = -k.radius; i <= k.radius; ++i) s += k[i] * sample(p + i);
      }
      out.at(r, c) = s;
    }
  }
  return out;
}

Plane correlate_adjoint(const Plane& grad_out, const Kernel1D& k, bool along_x) {
  Plane grad_in(grad_out.height, grad_out.width);
  const int n = along_x ? grad_out.width : grad_out.height;
  for (int r = 0; r < grad_out.height; ++r) {
    for (int c = 0; c < grad_out.width; ++c) {
      const double g = grad_out.at(r, c);
      if (g == 0.0) continue;
      const int p = along_x ? c : r;
      for (int i = -k.radius; i <= k.radius; ++i) {
        const int j = reflect(p + i, n);
        (along_x ? grad_in.at(r, j) : grad_in.at(j, c)) += k[i] * g;
      }
    }
  }
  return grad_in;
}

struct ScaleResponse {
  Plane dx;
  Plane dy;
};

struct Bank {
  std::array<Kernel1D, 2> smooth;
  std::array<Kernel1D, 2> deriv;
  std::array<double, 4> cos_t{};
  std::array<double, 4> sin_t{};

  Bank() {
    for (std::size_t s = 0; s < kSigmas.size(); ++s) {
      smooth[s] = gaussian(kSigmas[s]);
      deriv[s] = gaussian_derivative(kSigmas[s]);
    }
    for (std::size_t o = 0; o < kAnglesDeg.size(); ++o) {
      const double a = kAnglesDeg[o] * std::numbers::pi / 180.0;
      cos_t[o] = std::cos(a);
      sin_t[o] = std::sin(a);
    }
  }
};

const Bank& bank() {
  static const Bank b;
  return b;
}

Plane prepare(const RasterImage& image) {
  validate(image);
  const RasterImage gray = to_grayscale(resize_bilinear(image, kEncoderInputSize, kEncoderInputSize));
  Plane p(gray.height, gray.width);
  p.v = gray.data;
  return p;
}

// Derivative pass first, then smoothing across.
std::array<ScaleResponse, 2> respond(const Plane& gray) {
  std::array<ScaleResponse, 2> out;
  const Bank& b = bank();
  for (std::size_t s = 0; s < kSigmas.size(); ++s) {
    out[s].dx = correlate(correlate(gray, b.deriv[s], true), b.smooth[s], false);
    out[s].dy = correlate(correlate(gray, b.deriv[s], false), b.smooth[s], true);
  }
  return out;
}

double oriented(const ScaleResponse& r, std::size_t o, std::size_t i) {
  return bank().cos_t[o] * r.dx.v[i] + bank().sin_t[o] * r.dy.v[i];
}

// Cell-averaged response magnitudes, laid out as [map][cell_row][cell_col].
std::vector<double> pool_features(const std::array<ScaleResponse, 2>& responses, int grid, bool sum_scales,
                                  std::size_t dim) {
  const int cell = kEncoderInputSize / grid;
  const double inv_area = 1.0 / (cell * cell);
  const std::size_t cells = static_cast<std::size_t>(grid * grid);
  std::vector<double> features(dim, 0.0);
  for (std::size_t s = 0; s < kSigmas.size(); ++s) {
    for (std::size_t o = 0; o < kAnglesDeg.size(); ++o) {
      const std::size_t map = sum_scales ? o : s * kAnglesDeg.size() + o;
      for (int r = 0; r < kEncoderInputSize; ++r) {
        for (int c = 0; c < kEncoderInputSize; ++c) {
          const std::size_t i = static_cast<std::size_t>(r) * kEncoderInputSize + c;
          features[map * cells + static_cast<std::size_t>((r / cell) * grid + c / cell)] +=
              std::abs(oriented(responses[s], o, i)) * inv_area;
        }
      }
    }
  }
  return features;
}

}  // namespace

BuiltinEncoder::BuiltinEncoder(EncoderKind kind) {
  if (kind == EncoderKind::bridge) throw ContractError("BuiltinEncoder cannot be a bridge encoder");
  const bool semantic = kind == EncoderKind::builtin_semantic;
  grid_ = semantic ? 7 : 14;
  sum_scales_ = !semantic;
  descriptor_.name = semantic ? "builtin-semantic" : "builtin-perceptual";
  descriptor_.kind = kind;
  const std::size_t maps = sum_scales_ ? kOrientations : kOrientations * kScales;
  descriptor_.embedding_dim = maps * static_cast<std::size_t>(grid_ * grid_);
  descriptor_.capabilities = static_cast<std::uint8_t>(Capability::embed_image) |
                             static_cast<std::uint8_t>(Capability::activation_map) |
                             static_cast<std::uint8_t>(Capability::loss_grad);
}

std::vector<double> BuiltinEncoder::raw_features(const RasterImage& image) const {
  return pool_features(respond(prepare(image)), grid_, sum_scales_, descriptor_.embedding_dim);
}

Embedding BuiltinEncoder::embed_image(const RasterImage& image) {
  Embedding e;
  e.values = raw_features(image);
  const double n = l2_norm(e.values);
  if (n == 0.0) {
    e.degenerate = true;
    return e;
  }
  for (double& v : e.values) v /= n;
  return e;
}

ActivationMap BuiltinEncoder::activation_map(const RasterImage& image, CanvasSize canvas) {
  const auto responses = respond(prepare(image));
  ActivationMap map(kEncoderInputSize, kEncoderInputSize, 0.0);
  const double inv_maps = 1.0 / (kScales * kOrientations);
  for (std::size_t s = 0; s < kScales; ++s) {
    for (std::size_t o = 0; o < kOrientations; ++o) {
      for (std::size_t i = 0; i < map.data.size(); ++i) map.data[i] += std::abs(oriented(responses[s], o, i)) * inv_maps;
    }
  }
  return resize_map(map, canvas.height, canvas.width);
}

LossGradResult BuiltinEncoder::loss_and_grad(const RasterImage& image, const Embedding& target) {
  if (target.values.size() != descriptor_.embedding_dim) {
    throw ContractError("target embedding has dimension " + std::to_string(target.values.size()) +
                        ", encoder expects " + std::to_string(descriptor_.embedding_dim));
  }
  const Plane gray = prepare(image);
  const auto responses = respond(gray);

  const std::vector<double> features = pool_features(responses, grid_, sum_scales_, descriptor_.embedding_dim);
  const int cell = kEncoderInputSize / grid_;
  const double inv_area = 1.0 / (cell * cell);
  const std::size_t cells = static_cast<std::size_t>(grid_ * grid_);

  LossGradResult out;
  out.pixel_grad = PixelGrad(image.height, image.width, image.channels, 0.0);
  const double fn = l2_norm(features);
  const double tn = l2_norm(target.values);
  if (fn == 0.0 || tn == 0.0) {
    out.loss = 1.0;
    out.degenerate = true;
    return out;
  }
  const double cosine = dot(features, target.values) / (fn * tn);
  out.loss = 1.0 - cosine;

  // d(1 - cos)/df = -(t / (|f||t|) - cos f / |f|^2)
  std::vector<double> dfeat(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    dfeat[i] = -(target.values[i] / (fn * tn) - cosine * features[i] / (fn * fn));
  }

  const Bank& b = bank();
  Plane grad_gray(kEncoderInputSize, kEncoderInputSize);
  for (std::size_t s = 0; s < kScales; ++s) {
    Plane gdx(kEncoderInputSize, kEncoderInputSize);
    Plane gdy(kEncoderInputSize, kEncoderInputSize);
    for (std::size_t o = 0; o < kOrientations; ++o) {
      const std::size_t map = sum_scales_ ? o : s * kOrientations + o;
      for (int r = 0; r < kEncoderInputSize; ++r) {
        for (int c = 0; c < kEncoderInputSize; ++c) {
          const std::size_t i = static_cast<std::size_t>(r) * kEncoderInputSize + c;
          const double resp = oriented(responses[s], o, i);
          if (resp == 0.0) continue;
          const double g = dfeat[map * cells + static_cast<std::size_t>((r / cell) * grid_ + c / cell)] * inv_area *
                           (resp > 0.0 ? 1.0 : -1.0);
          gdx.v[i] += b.cos_t[o] * g;
          gdy.v[i] += b.sin_t[o] * g;
        }
      }
    }
    const Plane from_dx = correlate_adjoint(correlate_adjoint(gdx, b.smooth[s], false), b.deriv[s], true);
    const Plane from_dy = correlate_adjoint(correlate_adjoint(gdy, b.smooth[s], true), b.deriv[s], false);
    for (std::size_t i = 0; i < grad_gray.v.size(); ++i) grad_gray.v[i] += from_dx.v[i] + from_dy.v[i];
  }

  PixelGrad resized(kEncoderInputSize, kEncoderInputSize, image.channels, 0.0);
  const double inv_channels = 1.0 / image.channels;
  for (std::size_t i = 0; i < grad_gray.v.size(); ++i) {
    for (int ch = 0; ch < image.channels; ++ch) {
      resized.data[i * static_cast<std::size_t>(image.channels) + static_cast<std::size_t>(ch)] =
          grad_gray.v[i] * inv_channels;
    }
  }
  out.pixel_grad = resize_bilinear_adjoint(resized, image.height, image.width);
  return out;
}

}  // namespace glyphforge
