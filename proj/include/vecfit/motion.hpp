#pragma once

#include "vecfit/raster.hpp"
#include "vecfit/svg.hpp"

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace vecfit {

/// 8-DOF homography chart; the zero vector is the identity.
/// Layout: tx, ty (pixels), theta (radians), sx, sy (log-scale), shear,
/// p1, p2 (perspective, 1/pixels).
using HomographyParams = Eigen::Matrix<double, 8, 1>;

enum HomographyIndex : int { kTx = 0, kTy, kTheta, kSx, kSy, kShear, kP1, kP2 };

/// H = P T T_c R Sh S T_{-c}, applied to column vectors [x, y, 1].
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> compose_homography(const Eigen::Matrix<Scalar, 8, 1>& h,
                                               const Eigen::Matrix<Scalar, 2, 1>& center) {
  using Mat = Eigen::Matrix<Scalar, 3, 3>;
  using std::cos;
  using std::exp;
  using std::sin;
  Mat perspective = Mat::Identity();
  perspective(2, 0) = h[kP1];
  perspective(2, 1) = h[kP2];
  Mat translate = Mat::Identity();
  translate(0, 2) = h[kTx];
  translate(1, 2) = h[kTy];
  Mat to_center = Mat::Identity();
  to_center(0, 2) = center.x();
  to_center(1, 2) = center.y();
  Mat from_center = Mat::Identity();
  from_center(0, 2) = -center.x();
  from_center(1, 2) = -center.y();
  Mat rotate = Mat::Identity();
  rotate(0, 0) = cos(h[kTheta]);
  rotate(0, 1) = -sin(h[kTheta]);
  rotate(1, 0) = sin(h[kTheta]);
  rotate(1, 1) = cos(h[kTheta]);
  Mat shear = Mat::Identity();
  shear(0, 1) = h[kShear];
  Mat scale = Mat::Identity();
  scale(0, 0) = exp(h[kSx]);
  scale(1, 1) = exp(h[kSy]);
  return perspective * translate * to_center * rotate * shear * scale * from_center;
}

/// dH/dparam for each of the 8 parameters and dH/dcenter for both center
/// coordinates.
struct HomographyJacobian {
  std::array<Eigen::Matrix3d, 8> params;
  std::array<Eigen::Matrix3d, 2> center;
};

HomographyJacobian homography_jacobian(const HomographyParams& h, const Point& center);

/// Minimum homogeneous w accepted by the projection.
inline constexpr double kMinProjectiveW = 1e-6;

enum class ProjectionGuard {
  Throw,  // DegenerateProjection when w <= kMinProjectiveW
  Clamp,  // clamp w to kMinProjectiveW, gradients computed at the clamped value
};

/// x = pi(H [rest + offsets, 1]^T) for every column.
Eigen::Matrix2Xd apply_motion(const Eigen::Ref<const Eigen::Matrix2Xd>& rest,
                              const Eigen::Ref<const Eigen::Matrix2Xd>& offsets,
                              const Eigen::Matrix3d& homography,
                              ProjectionGuard guard = ProjectionGuard::Throw);

/// Canonical geometry of a document in working pixel space, plus the
/// bookkeeping needed to map flat control points to paths and groups.
struct CanonicalGeometry {
  struct PathSpan {
    int first = 0;  // flat index of the path's first control point
    int count = 0;
    int group = 0;
    std::vector<int> subpath_sizes;
  };

  Eigen::Matrix2Xd rest;           // flatten_params order, pixels
  std::vector<int> point_group;    // group of every control point
  std::vector<int> point_path;     // path of every control point
  std::vector<PathSpan> paths;     // document order
  std::vector<Point> group_centroids;  // bounding-box centers, pixels
  std::vector<int> painter_order;
  std::vector<Rgb> fills;          // per document path
  int group_count = 0;
  double pixels_per_unit = 1.0;
  int width = 0;                   // working raster size
  int height = 0;

  int point_count() const { return static_cast<int>(rest.cols()); }
  Point canvas_center() const { return Point(width / 2.0, height / 2.0); }
};

/// Pixel size is round(canvas * pixels_per_unit), at least 1.
CanonicalGeometry make_geometry(const SvgDocument& doc, double pixels_per_unit);
/// Working geometry whose longer canvas side spans `resolution` pixels.
CanonicalGeometry make_geometry_for_resolution(const SvgDocument& doc, int resolution);

/// Scene (painter order) for a full set of deformed control points.
Scene scene_from_points(const CanonicalGeometry& geom, const Eigen::Matrix2Xd& points);

struct MotionParams {
  std::vector<Eigen::Matrix<double, 8, Eigen::Dynamic>> homographies;  // [k]: 8 x G
  Eigen::Matrix2Xd centers;                                             // 2 x G
  std::vector<Eigen::Matrix2Xd> offsets;                                // [k]: 2 x N
  Point global_center = Point::Zero();

  int keyframes() const { return static_cast<int>(homographies.size()); }
  int groups() const { return static_cast<int>(centers.cols()); }
  int points() const { return offsets.empty() ? 0 : static_cast<int>(offsets[0].cols()); }

  /// Same shape, all zeros (also the gradient container).
  MotionParams zeros_like() const;
  bool same_shape(const MotionParams& other) const;
  /// Flat view used by the optimizer and the finite-difference checks:
  /// centers, then per keyframe homographies and offsets.
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& flat);
};

/// Rest pose: identity homographies, zero offsets, centers at the group
/// bounding-box centroids, global center at the canvas center.
MotionParams init_params(const CanonicalGeometry& geom, int keyframes);

Eigen::Matrix3d keyframe_homography(const MotionParams& params, int keyframe, int group);

/// All control points of keyframe `k` after offsets and group homographies.
Eigen::Matrix2Xd deform_keyframe(const CanonicalGeometry& geom, const MotionParams& params, int k,
                                 ProjectionGuard guard = ProjectionGuard::Throw);

struct KeyframeGradient {
  Eigen::Matrix<double, 8, Eigen::Dynamic> homographies;  // 8 x G
  Eigen::Matrix2Xd centers;                               // 2 x G
  Eigen::Matrix2Xd offsets;                               // 2 x N
};

/// Chain rule from gradients on the deformed points of keyframe `k` to that
/// keyframe's homographies and offsets and to the shared centers.
KeyframeGradient motion_backward(const CanonicalGeometry& geom, const MotionParams& params, int k,
                                 const Eigen::Matrix2Xd& upstream,
                                 ProjectionGuard guard = ProjectionGuard::Throw);

/// JSON checkpoint:
/// {"centers": [[cx, cy], ...], "keyframes": [{"groups": [[8 values], ...],
///  "offsets": [[dx, dy], ...]}, ...], "global_center": [x, y],
///  "pixels_per_unit": s, "width": W, "height": H}
std::string motion_to_json(const MotionParams& params, const CanonicalGeometry& geom);
MotionParams motion_from_json(std::string_view text, const CanonicalGeometry& geom);

}  // namespace vecfit
