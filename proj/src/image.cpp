#include <algorithm>
#include <cmath>

#include "glyphforge/errors.hpp"
#include "glyphforge/image.hpp"

namespace glyphforge {
namespace {

struct Tap {
  int i0 = 0;
  int i1 = 0;
  double w1 = 0.0;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> axis_taps(int src, int dst) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (int i = 0; i < dst; ++i) {
    const double x = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
    Tap t;
    t.i0 = static_cast<int>(std::floor(x));
    t.i1 = std::min(t.i0 + 1, src - 1);
    t.w1 = x - t.i0;
    taps[static_cast<std::size_t>(i)] = t;
  }
  return taps;
}

}  // namespace

void validate(const RasterImage& image) {
  if (image.height <= 0 || image.width <= 0 || image.channels <= 0) {
    throw ContractError("image dimensions must be positive");
  }
  if (image.data.size() != static_cast<std::size_t>(image.height) * image.width * image.channels) {
    throw ContractError("image data size does not match H*W*C");
  }
  for (double v : image.data) {
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("image value outside [0, 1]");
  }
}

RasterImage to_grayscale(const RasterImage& image) {
  RasterImage out(image.height, image.width, 1);
  const std::size_t n = static_cast<std::size_t>(image.height) * image.width;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int ch = 0; ch < image.channels; ++ch) sum += image.data[i * image.channels + ch];
    out.data[i] = sum / image.channels;
  }
  return out;
}

RasterImage resize_bilinear(const RasterImage& image, int height, int width) {
  if (height <= 0 || width <= 0) throw ContractError("resize target must be positive");
  if (image.height == height && image.width == width) return image;
  const auto ty = axis_taps(image.height, height);
  const auto tx = axis_taps(image.width, width);
  RasterImage out(height, width, image.channels, 0.0);
  for (int r = 0; r < height; ++r) {
    const Tap& y = ty[static_cast<std::size_t>(r)];
    for (int c = 0; c < width; ++c) {
      const Tap& x = tx[static_cast<std::size_t>(c)];
      for (int ch = 0; ch < image.channels; ++ch) {
        const double top = (1.0 - x.w1) * image.at(y.i0, x.i0, ch) + x.w1 * image.at(y.i0, x.i1, ch);
        const double bottom = (1.0 - x.w1) * image.at(y.i1, x.i0, ch) + x.w1 * image.at(y.i1, x.i1, ch);
        out.at(r, c, ch) = (1.0 - y.w1) * top + y.w1 * bottom;
      }
    }
  }
  return out;
}

PixelGrad resize_bilinear_adjoint(const PixelGrad& grad, int src_height, int src_width) {
  if (grad.height == src_height && grad.width == src_width) return grad;
  const auto ty = axis_taps(src_height, grad.height);
  const auto tx = axis_taps(src_width, grad.width);
  PixelGrad out(src_height, src_width, grad.channels, 0.0);
  for (int r = 0; r < grad.height; ++r) {
    const Tap& y = ty[static_cast<std::size_t>(r)];
    for (int c = 0; c < grad.width; ++c) {
      const Tap& x = tx[static_cast<std::size_t>(c)];
      for (int ch = 0; ch < grad.channels; ++ch) {
        const double g = grad.at(r, c, ch);
        out.at(y.i0, x.i0, ch) += (1.0 - y.w1) * (1.0 - x.w1) * g;
        out.at(y.i0, x.i1, ch) += (1.0 - y.w1) * x.w1 * g;
        out.at(y.i1, x.i0, ch) += y.w1 * (1.0 - x.w1) * g;
        out.at(y.i1, x.i1, ch) += y.w1 * x.w1 * g;
      }
    }
  }
  return out;
}

}  // namespace glyphforge
