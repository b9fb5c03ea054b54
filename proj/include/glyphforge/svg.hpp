#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "glyphforge/geometry.hpp"

namespace glyphforge {

/// One <path> per stroke ("M x y C ..."), black, fill none, over a white background
/// rect. The viewBox is offset by half a pixel so control points keep the
/// pixel-center convention.
std::string to_svg(const VectorSketch& sketch);

/// Reads documents produced by to_svg. Throws FormatError on anything else.
VectorSketch from_svg(std::string_view svg);

void write_svg(const VectorSketch& sketch, const std::filesystem::path& path);
VectorSketch read_svg(const std::filesystem::path& path);

}  // namespace glyphforge
