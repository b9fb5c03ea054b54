#pragma once

#include <cstddef>
#include <vector>

namespace glyphforge {

/// Row-major H x W x C image, values in [0, 1]. 1.0 is white.
struct RasterImage {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  RasterImage() = default;
  RasterImage(int h, int w, int c, double fill = 1.0)
      : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t index(int r, int c, int ch = 0) const {
    return (static_cast<std::size_t>(r) * width + c) * channels + ch;
  }
  double& at(int r, int c, int ch = 0) { return data[index(r, c, ch)]; }
  double at(int r, int c, int ch = 0) const { return data[index(r, c, ch)]; }
  std::size_t size() const noexcept { return data.size(); }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

/// d(loss)/d(pixel) for an image of the same shape.
struct PixelGrad {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  PixelGrad() = default;
  PixelGrad(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t index(int r, int c, int ch = 0) const {
    return (static_cast<std::size_t>(r) * width + c) * channels + ch;
  }
  double& at(int r, int c, int ch = 0) { return data[index(r, c, ch)]; }
  double at(int r, int c, int ch = 0) const { return data[index(r, c, ch)]; }
};

/// Throws ContractError unless sizes agree and every value is in [0, 1].
void validate(const RasterImage& image);

/// Channel mean as a single-channel image.
RasterImage to_grayscale(const RasterImage& image);

/// Bilinear resampling with pixel-center alignment (align_corners = false).
RasterImage resize_bilinear(const RasterImage& image, int height, int width);

/// Adjoint of resize_bilinear: maps a gradient on the resized image back to the source shape.
PixelGrad resize_bilinear_adjoint(const PixelGrad& grad, int src_height, int src_width);

}  // namespace glyphforge
