#include "glyphforge/svg.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

#include "glyphforge/errors.hpp"
#include "glyphforge/io_util.hpp"

namespace glyphforge {
namespace {

std::string attribute(const std::string& tag, const std::string& name) {
  const std::regex re("\\s" + name + "=\"([^\"]*)\"");
  std::smatch m;
  if (!std::regex_search(tag, m, re)) throw FormatError("svg: missing attribute '" + name + "'");
  return m[1].str();
}

double parse_number(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw FormatError("svg: bad number '" + text + "'");
  return v;
}

CubicBezierStroke parse_path_data(const std::string& d) {
  std::string cleaned = d;
  for (char& ch : cleaned) {
    if (ch == ',') ch = ' ';
  }
  std::istringstream in(cleaned);
  std::string tok;
  std::vector<std::string> tokens;
  while (in >> tok) tokens.push_back(tok);
  if (tokens.size() != 10 || tokens[0] != "M" || tokens[3] != "C") {
    throw FormatError("svg: path data is not a single 'M x y C ...' cubic");
  }
  CubicBezierStroke stroke;
  const std::size_t idx[4][2] = {{1, 2}, {4, 5}, {6, 7}, {8, 9}};
  for (std::size_t k = 0; k < 4; ++k) {
    stroke.points[k] = {parse_number(tokens[idx[k][0]]), parse_number(tokens[idx[k][1]])};
  }
  return stroke;
}

}  // namespace

std::string to_svg(const VectorSketch& sketch) {
  validate(sketch);
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  const int w = sketch.canvas.width;
  const int h = sketch.canvas.height;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"-0.5 -0.5 " << w << " " << h << "\">\n";
  out << "  <rect x=\"-0.5\" y=\"-0.5\" width=\"" << w << "\" height=\"" << h << "\" fill=\"#ffffff\"/>\n";
  for (const auto& stroke : sketch.strokes) {
    const auto& p = stroke.points;
    out << "  <path d=\"M " << p[0].x << " " << p[0].y << " C " << p[1].x << " " << p[1].y << " "
        << p[2].x << " " << p[2].y << " " << p[3].x << " " << p[3].y
        << "\" stroke=\"#000000\" stroke-width=\"" << sketch.stroke_width
        << "\" fill=\"none\" stroke-linecap=\"round\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

VectorSketch from_svg(std::string_view svg) {
  const std::string text(svg);
  VectorSketch sketch;

  std::smatch m;
  if (!std::regex_search(text, m, std::regex("<svg[^>]*>"))) throw FormatError("svg: no <svg> element");
  const std::string root = m[0].str();
  sketch.canvas.width = static_cast<int>(parse_number(attribute(root, "width")));
  sketch.canvas.height = static_cast<int>(parse_number(attribute(root, "height")));

  const std::regex path_re("<path[^>]*>");
  bool have_width = false;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), path_re); it != std::sregex_iterator(); ++it) {
    const std::string tag = it->str();
    sketch.strokes.push_back(parse_path_data(attribute(tag, "d")));
    const double width = parse_number(attribute(tag, "stroke-width"));
    if (have_width && width != sketch.stroke_width) {
      throw FormatError("svg: strokes with differing widths are not supported");
    }
    sketch.stroke_width = width;
    have_width = true;
  }
  if (sketch.strokes.empty()) throw FormatError("svg: no strokes");
  return sketch;
}

void write_svg(const VectorSketch& sketch, const std::filesystem::path& path) {
  write_file_atomic(path, to_svg(sketch));
}

VectorSketch read_svg(const std::filesystem::path& path) { return from_svg(read_file(path)); }

}  // namespace glyphforge
