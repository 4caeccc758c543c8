#include "vecfit/error.hpp"
#include "vecfit/svg.hpp"

#include "svg/format.hpp"

#include <cmath>
#include <limits>

namespace vecfit {

std::size_t PathGeometry::control_point_count() const {
  std::size_t n = 0;
  for (const Subpath& s : subpaths) n += s.points.size();
  return n;
}

std::size_t SvgDocument::control_point_count() const {
  std::size_t n = 0;
  for (const PathGeometry& p : paths) n += p.control_point_count();
  return n;
}

void SvgDocument::update_centroids() {
  for (Group& g : groups) {
    Point lo = Point::Constant(std::numeric_limits<double>::infinity());
    Point hi = -lo;
    for (int index : g.path_indices)
      for (const Subpath& s : paths[index].subpaths)
        for (const Point& p : s.points) {
          lo = lo.cwiseMin(p);
          hi = hi.cwiseMax(p);
        }
    g.centroid = lo.allFinite() ? Point((lo + hi) / 2.0) : Point::Zero();
  }
}

std::string color_to_hex(const Rgb& color) {
  static const char* digits = "0123456789abcdef";
  std::string out = "#";
  for (int c = 0; c < 3; ++c) {
    const int v = static_cast<int>(std::lround(std::clamp(color[c], 0.0, 1.0) * 255.0));
    out += digits[v / 16];
    out += digits[v % 16];
  }
  return out;
}

namespace detail {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string format_fixed(double v, int decimals) {
  std::array<char, 64> buf{};
  double rounded = std::round(v * std::pow(10.0, decimals)) / std::pow(10.0, decimals);
  if (rounded == 0.0) rounded = 0.0;  // no "-0"
  const auto [ptr, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), rounded, std::chars_format::fixed, decimals);
  std::string s(buf.data(), ptr);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string path_data(const std::vector<Subpath>& subpaths,
                      const std::function<std::string(double)>& number) {
  std::string d;
  auto pt = [&](const Point& p) { return number(p.x()) + " " + number(p.y()); };
  for (const Subpath& s : subpaths) {
    const std::size_t n = s.segment_count();
    if (n == 0) continue;
    if (!d.empty()) d += ' ';
    d += "M" + pt(s.points[0]);
    for (std::size_t j = 0; j < n; ++j) {
      const Point& end = s.points[(3 * j + 3) % (3 * n)];
      d += " C" + pt(s.points[3 * j + 1]) + " " + pt(s.points[3 * j + 2]) + " " + pt(end);
    }
    d += " Z";
  }
  return d;
}

std::string fill_attribute(const Rgb& color) {
  bool exact = true;
  for (int c = 0; c < 3; ++c) {
    const double v = color[c] * 255.0;
    if (v != std::round(v) || std::round(v) / 255.0 != color[c]) exact = false;
  }
  if (exact) return color_to_hex(color);
  return "rgb(" + format_double(color[0] * 255.0) + "," + format_double(color[1] * 255.0) + "," +
         format_double(color[2] * 255.0) + ")";
}

}  // namespace detail

std::string serialize_static(const SvgDocument& doc) {
  using detail::format_double;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    format_double(doc.canvas_width) + "\" height=\"" +
                    format_double(doc.canvas_height) + "\" viewBox=\"0 0 " +
                    format_double(doc.canvas_width) + " " + format_double(doc.canvas_height) +
                    "\">\n";
  int open_group = -1;
  for (int index : doc.painter_order) {
    const PathGeometry& path = doc.paths[index];
    // A path that is its own group was written outside any <g>.
    const Group& group = doc.groups[path.group];
    const bool bare = group.path_indices.size() == 1 && group.id == path.id;
    if (path.group != open_group || bare) {
      if (open_group >= 0) out += "  </g>\n";
      open_group = -1;
      if (!bare) {
        open_group = path.group;
        out += "  <g id=\"" + detail::xml_escape(group.id) + "\">\n";
      }
    }
    out += std::string(open_group >= 0 ? "    " : "  ") + "<path id=\"" + detail::xml_escape(path.id) + "\" d=\"" +
           detail::path_data(path.subpaths, format_double) + "\" fill=\"" +
           detail::fill_attribute(path.fill) + "\"/>\n";
  }
  if (open_group >= 0) out += "  </g>\n";
  out += "</svg>\n";
  return out;
}

std::vector<int> path_offsets(const SvgDocument& doc) {
  std::vector<int> offsets(doc.paths.size() + 1, 0);
  for (std::size_t i = 0; i < doc.paths.size(); ++i)
    offsets[i + 1] = offsets[i] + static_cast<int>(doc.paths[i].control_point_count());
  return offsets;
}

FlatParams flatten_params(const SvgDocument& doc) {
  FlatParams flat;
  flat.points.resize(2, static_cast<Eigen::Index>(doc.control_point_count()));
  flat.index.reserve(static_cast<std::size_t>(flat.points.cols()));
  int k = 0;
  for (std::size_t p = 0; p < doc.paths.size(); ++p) {
    const auto& subpaths = doc.paths[p].subpaths;
    for (std::size_t s = 0; s < subpaths.size(); ++s) {
      for (std::size_t i = 0; i < subpaths[s].points.size(); ++i) {
        flat.points.col(k) = subpaths[s].points[i];
        flat.index.push_back({static_cast<int>(p), static_cast<int>(s), static_cast<int>(i),
                              i % 3 == 0 ? ControlRole::Anchor : ControlRole::Handle, k});
        ++k;
      }
    }
  }
  return flat;
}

SvgDocument unflatten_params(const SvgDocument& doc, const Eigen::Matrix2Xd& points) {
  if (static_cast<std::size_t>(points.cols()) != doc.control_point_count())
    throw DimensionMismatch("unflatten_params: expected " + std::to_string(doc.control_point_count()) +
                            " points, got " + std::to_string(points.cols()));
  SvgDocument out = doc;
  int k = 0;
  for (PathGeometry& path : out.paths)
    for (Subpath& s : path.subpaths)
      for (Point& p : s.points) p = points.col(k++);
  out.update_centroids();
  return out;
}

}  // namespace vecfit
