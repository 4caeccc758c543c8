#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vecfit {

using Point = Eigen::Vector2d;
using Rgb = Eigen::Vector3d;
using Affine2 = Eigen::Matrix<double, 2, 3>;

/// A closed loop of cubic segments.
///
/// Points are stored in parameter order: for segment j of an n-segment loop,
/// `points[3j]` is the anchor a_j, `points[3j+1]` the outgoing handle c+_j and
/// `points[3j+2]` the incoming handle c-_{j+1} of the next anchor. Segment j is
/// therefore (p[3j], p[3j+1], p[3j+2], p[(3j+3) mod 3n]) and the loop closes on
/// its first anchor by construction.
struct Subpath {
  std::vector<Point> points;

  std::size_t segment_count() const { return points.size() / 3; }
};

struct PathGeometry {
  std::string id;
  std::vector<Subpath> subpaths;
  Rgb fill = Rgb::Zero();
  Rgb original_fill = Rgb::Zero();  // survives recolorization
  int group = -1;

  std::size_t control_point_count() const;
};

struct Group {
  std::string id;
  std::vector<int> path_indices;
  Point centroid = Point::Zero();  // bounding-box center, user units
};

/// Canonical vector scene. Paths are stored in document order; `painter_order`
/// lists path indices back to front.
struct SvgDocument {
  double canvas_width = 0.0;
  double canvas_height = 0.0;
  std::vector<PathGeometry> paths;
  std::vector<Group> groups;
  std::vector<int> painter_order;

  std::size_t control_point_count() const;
  /// Recomputes every group's bounding-box centroid from its paths.
  void update_centroids();
};

struct ParseOptions {
  /// When false, strokes, opacity and even-odd fill rules are ignored (and
  /// reported through the warning list) instead of rejected.
  bool strict = true;
  /// Skip `<animate>`/`<set>` children instead of rejecting them.
  bool skip_animations = false;
};

SvgDocument parse_svg(std::string_view text, const ParseOptions& options = {},
                      std::vector<std::string>* warnings = nullptr);
SvgDocument load_svg(const std::string& file, const ParseOptions& options = {},
                     std::vector<std::string>* warnings = nullptr);

std::string serialize_static(const SvgDocument& doc);

/// Parses SVG path data into closed cubic loops in the coordinates of the
/// path data, then maps them through `transform`.
std::vector<Subpath> parse_path_data(std::string_view d, const Affine2& transform);

/// Cubic approximation of an elliptical arc (SVG endpoint parameterization).
/// Appends c1, c2, end triples to `out`; max deviation <= `tolerance`.
void arc_to_cubics(const Point& from, double rx, double ry, double x_axis_rotation_deg,
                   bool large_arc, bool sweep, const Point& to,
                   std::vector<Point>& out, double tolerance = 0.01);

Rgb parse_color(std::string_view text);
std::string color_to_hex(const Rgb& color);

enum class ControlRole { Anchor, Handle };

struct ControlPointIndex {
  int path = 0;
  int subpath = 0;
  int local = 0;  // position inside the subpath's point list
  ControlRole role = ControlRole::Anchor;
  int flat_index = 0;
};

struct FlatParams {
  Eigen::Matrix2Xd points;
  std::vector<ControlPointIndex> index;
};

FlatParams flatten_params(const SvgDocument& doc);
/// Inverse of flatten_params: a copy of `doc` with its control points replaced.
SvgDocument unflatten_params(const SvgDocument& doc, const Eigen::Matrix2Xd& points);

/// First flat index of each path (size P + 1, last entry = total count).
std::vector<int> path_offsets(const SvgDocument& doc);

}  // namespace vecfit
