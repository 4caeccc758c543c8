#pragma once

#include "vecfit/motion.hpp"
#include "vecfit/palette.hpp"
#include "vecfit/raster.hpp"
#include "vecfit/svg.hpp"

#include <string>
#include <vector>

namespace vecfit {

/// Softness of the hard-edged preview renderer, pixels.
inline constexpr double kExportSoftness = 0.25;

struct BakedPath {
  int source = 0;  // document path index
  std::string id;
  Rgb fill = Rgb::Zero();
  std::vector<std::string> d;  // one per keyframe
};

struct BakedAnimation {
  std::vector<BakedPath> paths;              // painter order
  std::vector<Eigen::Matrix2Xd> keyframes;   // user-space control points, flatten_params order
  double duration = 0.0;                     // seconds

  int keyframe_count() const { return static_cast<int>(keyframes.size()); }
};

/// User-space control points of keyframe `k`. A keyframe with all-zero
/// parameters returns the document's own coordinates bit for bit.
Eigen::Matrix2Xd keyframe_user_points(const SvgDocument& doc, const CanonicalGeometry& geom,
                                      const MotionParams& params, int k);

/// Applies the motion to every keyframe (DegenerateProjection when a point
/// leaves the projective domain) and writes each as `d` data rounded to 4
/// decimals; keyframe 0 keeps full precision when it is at rest. With a map,
/// fills are restored to the original colors.
BakedAnimation bake_keyframes(const SvgDocument& doc, const CanonicalGeometry& geom, const MotionParams& params,
                              const RecolorMap* map = nullptr);

enum class Repeat { Indefinite, Count };

struct AnimationTiming {
  double duration = 0.0;  // seconds; <= 0 picks K / 5
  Repeat repeat = Repeat::Indefinite;
  int repeat_count = 1;
};

/// "0;0.5;1" style list of K uniformly spaced times.
std::string key_times(int keyframes);

std::string write_animated_svg(const BakedAnimation& baked, const SvgDocument& doc,
                               const AnimationTiming& timing = {});

/// Renders every keyframe at `width` x `height` with the preview softness.
std::vector<RasterFrame> render_keyframes(const SvgDocument& doc, const CanonicalGeometry& geom,
                                          const MotionParams& params, int width, int height,
                                          double softness = kExportSoftness);
/// Renders and writes `outdir/frame_%04d.png`; returns the file names.
std::vector<std::string> write_frames(const SvgDocument& doc, const CanonicalGeometry& geom,
                                      const MotionParams& params, int width, int height, const std::string& outdir);

/// Static render of `doc` with the preview renderer.
RasterFrame render_document(const SvgDocument& doc, int width, int height, double softness = kExportSoftness);

}  // namespace vecfit
