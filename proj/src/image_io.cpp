#include "glyphforge/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "glyphforge/errors.hpp"

namespace glyphforge {

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void encode_tensor(ByteWriter& out, const Tensor& tensor) {
  if (tensor.dims.size() > 255) throw ContractError("tensor rank exceeds 255");
  if (tensor.element_count() != tensor.values.size()) throw ContractError("tensor dims do not match value count");
  out.u8(static_cast<std::uint8_t>(tensor.dims.size()));
  for (auto d : tensor.dims) out.u32(d);
  for (float v : tensor.values) out.f32(v);
}

Tensor decode_tensor(ByteReader& in) {
  Tensor t;
  const std::uint8_t ndim = in.u8();
  t.dims.resize(ndim);
  for (auto& d : t.dims) d = in.u32();
  const std::size_t n = t.element_count();
  if (n > in.remaining() / 4) {
    throw LengthError("tensor declares " + std::to_string(n) + " values but only " +
                      std::to_string(in.remaining()) + " bytes remain");
  }
  t.values.resize(n);
  for (auto& v : t.values) v = in.f32();
  return t;
}

Tensor to_tensor(const RasterImage& image) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(image.height), static_cast<std::uint32_t>(image.width),
            static_cast<std::uint32_t>(image.channels)};
  t.values.assign(image.data.begin(), image.data.end());
  return t;
}

RasterImage image_from_tensor(const Tensor& tensor) {
  if (tensor.dims.size() != 2 && tensor.dims.size() != 3) throw FormatError("image tensor must be H x W [x C]");
  RasterImage img(static_cast<int>(tensor.dims[0]), static_cast<int>(tensor.dims[1]),
                  tensor.dims.size() == 3 ? static_cast<int>(tensor.dims[2]) : 1, 0.0);
  img.data.assign(tensor.values.begin(), tensor.values.end());
  return img;
}

void write_tensor(const Tensor& tensor, const std::filesystem::path& path) {
  ByteWriter w;
  encode_tensor(w, tensor);
  write_file_atomic(path, w.bytes());
}

Tensor read_tensor(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  ByteReader r(bytes);
  Tensor t = decode_tensor(r);
  if (!r.done()) throw FormatError("trailing bytes after tensor in " + path.string());
  return t;
}

void write_png(const RasterImage& image, const std::filesystem::path& path) {
  validate(image);
  const bool gray = image.channels == 1;
  if (!gray && image.channels != 3) throw ContractError("PNG export needs 1 or 3 channels");
  std::vector<png_byte> pixels(image.data.size());
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    pixels[i] = static_cast<png_byte>(std::lround(255.0 * std::clamp(image.data[i], 0.0, 1.0)));
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png encode failed: ") + png.message);
  }
  std::string buffer(size, '\0');
  if (!png_image_write_to_memory(&png, buffer.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png encode failed: ") + png.message);
  }
  buffer.resize(size);
  write_file_atomic(path, buffer);
}

RasterImage read_png(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw FormatError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, pixels.data(), 0, nullptr)) {
    throw FormatError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  RasterImage img(static_cast<int>(png.height), static_cast<int>(png.width), 3, 0.0);
  for (std::size_t i = 0; i < pixels.size(); ++i) img.data[i] = pixels[i] / 255.0;
  return img;
}

RasterImage load_image(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  RasterImage img = ext == ".png" ? read_png(path) : image_from_tensor(read_tensor(path));
  validate(img);
  return img;
}

}  // namespace glyphforge
