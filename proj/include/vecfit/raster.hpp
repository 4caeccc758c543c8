#pragma once

#include "vecfit/svg.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace vecfit {

using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BitImage = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// H x W RGB image, channel values in [0, 1]. Pixel (x, y) is stored at
/// row y, column x and covers [x, x+1) x [y, y+1) in pixel coordinates.
struct RasterFrame {
  std::array<Image, 3> rgb;

  RasterFrame() = default;
  RasterFrame(int width, int height, double value = 1.0);

  int width() const { return static_cast<int>(rgb[0].cols()); }
  int height() const { return static_cast<int>(rgb[0].rows()); }
  Eigen::Vector3d pixel(int x, int y) const {
    return {rgb[0](y, x), rgb[1](y, x), rgb[2](y, x)};
  }
  void set_pixel(int x, int y, const Eigen::Vector3d& c) {
    for (int k = 0; k < 3; ++k) rgb[k](y, x) = c[k];
  }
};

struct ForegroundMask {
  BitImage bits;

  ForegroundMask() = default;
  ForegroundMask(int width, int height, bool value = false)
      : bits(BitImage::Constant(height, width, value)) {}

  int width() const { return static_cast<int>(bits.cols()); }
  int height() const { return static_cast<int>(bits.rows()); }
  std::size_t count() const { return static_cast<std::size_t>(bits.count()); }
};

/// Per-pixel distance (pixels) to the foreground, with the one-pixel margin
/// already removed: zero on and next to the foreground.
struct SdfMap {
  Image dist;

  int width() const { return static_cast<int>(dist.cols()); }
  int height() const { return static_cast<int>(dist.rows()); }

  /// Bilinear sample at a continuous pixel-space point (pixel centers at
  /// x + 0.5). Points off the canvas read the clamped border value.
  double sample(const Point& q) const;
  /// Exact derivative of `sample` (zero across clamped directions).
  Point gradient(const Point& q) const;
  /// Bilinear interpolation of the central-difference gradient field.
  Point smoothed_gradient(const Point& q) const;
};

// ---------------------------------------------------------------------------
// Geometry handed to the rasterizer.

/// One filled path in pixel space. `subpath_sizes` partitions `points` into
/// closed loops laid out as in Subpath.
struct RenderPath {
  std::vector<int> subpath_sizes;
  Eigen::Matrix2Xd points;
  Rgb fill = Rgb::Zero();
  int source = -1;  // document path index
};

/// Paths in painter order (back to front).
struct Scene {
  std::vector<RenderPath> paths;
};

/// Static scene of `doc` in painter order, user units scaled by `scale`.
Scene make_scene(const SvgDocument& doc, double scale);

// ---------------------------------------------------------------------------
// Flattening.

template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> bernstein_weights(Scalar t) {
  const Scalar s = Scalar(1) - t;
  return {s * s * s, Scalar(3) * t * s * s, Scalar(3) * t * t * s, t * t * t};
}

/// Parameter values produced by recursive de Casteljau midpoint subdivision
/// until every piece's handles lie within `tolerance` of its chord. Includes
/// both ends, except that a fully degenerate cubic yields just {0}.
std::vector<double> flatten_cubic(const Point& p0, const Point& p1, const Point& p2,
                                  const Point& p3, double tolerance);

struct OutlineVertex {
  Point position;
  std::array<int, 4> control{};  // indices into the path's point list
  Eigen::Vector4d weights;       // Bernstein weights, sum to 1
};

struct FlattenedSubpath {
  std::vector<OutlineVertex> vertices;  // closed polyline, last joins first
};

struct FlattenedOutline {
  std::vector<FlattenedSubpath> subpaths;
};

/// Vertex parameters per subpath, per segment (segment end excluded).
using TessellationPlan = std::vector<std::vector<std::vector<double>>>;
/// One plan per Scene path.
using ScenePlan = std::vector<TessellationPlan>;

TessellationPlan plan_tessellation(const RenderPath& path, double tolerance);
ScenePlan plan_scene(const Scene& scene, double tolerance);

/// Flattens `path`. With a plan, vertices are placed at the plan's parameters
/// instead of re-running the subdivision, which keeps the outline's topology
/// fixed while control points move.
FlattenedOutline flatten(const RenderPath& path, double tolerance,
                         const TessellationPlan* plan = nullptr);
FlattenedOutline flatten(const PathGeometry& path, double tolerance);

// ---------------------------------------------------------------------------
// Soft rasterization.

struct RenderOptions {
  double softness = 0.7;          // logistic scale of the coverage edge, pixels
  double band_margin = 2.0;       // extra band beyond 4 * softness (blur radius)
  double flatten_tolerance = 0.1;

  double band() const { return 4.0 * softness + band_margin; }
};

/// Coverage for a signed distance `d` (negative inside): logistic in -d/tau,
/// rescaled so it reaches exactly 0 and 1 at the band edges |d| = band.
double coverage(double d, double softness, double band);
double coverage_derivative(double d, double softness, double band);

/// Intermediate state recorded by `render` for the backward pass.
struct RenderTape {
  struct BandSample {
    int pixel;              // y * width + x
    int edge;               // index into PathTape::edges
    double t;               // closest-point parameter along the edge
    double dalpha_dd;       // coverage derivative
    Point dd_dq;            // derivative of signed distance w.r.t. closest point
    Eigen::Vector3d below;  // composite color under this path
  };
  struct PathTape {
    int x0 = 0, y0 = 0;
    Image alpha;  // coverage over the path's band-expanded bounding box
    std::vector<OutlineVertex> vertices;
    std::vector<std::array<int, 2>> edges;  // vertex index pairs
    std::vector<BandSample> band;
  };
  int width = 0;
  int height = 0;
  std::vector<PathTape> paths;
};

RasterFrame render(const Scene& scene, int width, int height, const RenderOptions& options = {},
                   RenderTape* tape = nullptr, const ScenePlan* plan = nullptr);

/// Gradient of sum(upstream .* render(scene)) w.r.t. every path's control
/// points, one 2 x n block per Scene path.
std::vector<Eigen::Matrix2Xd> render_backward(const Scene& scene, const RenderTape& tape,
                                              const RasterFrame& upstream);
std::vector<Eigen::Matrix2Xd> render_backward(const Scene& scene, int width, int height,
                                              const RenderOptions& options,
                                              const RasterFrame& upstream,
                                              const ScenePlan* plan = nullptr);

// ---------------------------------------------------------------------------
// Image utilities.

/// Normalized 1D weights of the 5-tap Gaussian (sigma = 1).
std::array<double, 5> gaussian_kernel();
/// Separable 5x5 Gaussian blur with clamp-to-edge borders.
RasterFrame gaussian_blur(const RasterFrame& frame);
/// Transpose of gaussian_blur (differs from it only within 2 px of a border).
RasterFrame gaussian_blur_adjoint(const RasterFrame& frame);

ForegroundMask foreground_mask(const RasterFrame& frame, double white_thresh = 0.98);
ForegroundMask dilate(const ForegroundMask& mask);
RasterFrame clean_target(const RasterFrame& frame, const ForegroundMask& mask);
/// Exact Euclidean distance from every pixel center to the nearest foreground
/// pixel center (zero on the foreground, +inf when the mask is empty).
Image euclidean_distance(const ForegroundMask& mask);
SdfMap distance_transform(const ForegroundMask& mask);

/// Area-weighted resampling to `width` x `height`.
RasterFrame resample(const RasterFrame& frame, int width, int height);

// ---------------------------------------------------------------------------
// PNG I/O.

RasterFrame read_png(const std::string& file);
void write_png(const std::string& file, const RasterFrame& frame);
ForegroundMask read_mask_png(const std::string& file);
void write_mask_png(const std::string& file, const ForegroundMask& mask);

/// `dir/frame_0000.png`, `dir/frame_0001.png`, ... until the first gap.
std::vector<RasterFrame> read_frame_sequence(const std::string& dir);
std::vector<std::string> write_frame_sequence(const std::string& dir,
                                              const std::vector<RasterFrame>& frames);
std::string frame_file_name(int index);

}  // namespace vecfit
