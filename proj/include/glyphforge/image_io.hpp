#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "glyphforge/image.hpp"
#include "glyphforge/io_util.hpp"

namespace glyphforge {

/// Dense float32 tensor. Wire form: ndim u8 | dims u32 LE | float32 LE values, row-major.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

void encode_tensor(ByteWriter& out, const Tensor& tensor);
Tensor decode_tensor(ByteReader& in);

Tensor to_tensor(const RasterImage& image);  // H x W x C
RasterImage image_from_tensor(const Tensor& tensor);  // accepts H x W or H x W x C

void write_tensor(const Tensor& tensor, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

/// 8-bit PNG, value = round(255 v). One channel is written as grayscale.
void write_png(const RasterImage& image, const std::filesystem::path& path);
/// Any PNG, converted to 8-bit RGB and scaled to [0, 1].
RasterImage read_png(const std::filesystem::path& path);

/// Dispatches on extension: .png or a raw tensor file.
RasterImage load_image(const std::filesystem::path& path);

}  // namespace glyphforge
