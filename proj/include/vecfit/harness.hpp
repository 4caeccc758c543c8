#pragma once

#include "vecfit/motion.hpp"
#include "vecfit/raster.hpp"
#include "vecfit/svg.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vecfit {

/// Group motion ramped linearly from rest at keyframe 0 to these values at
/// keyframe K - 1 (pixels, degrees, log-scale).
struct GroupProgram {
  Point translation = Point::Zero();
  double rotation_deg = 0.0;
  double log_scale = 0.0;
};

/// Vertical bend: offset_y = amplitude * ramp * sin(2 pi frequency x / W).
struct OffsetProgram {
  double amplitude = 0.0;
  double frequency = 1.0;
};

struct SyntheticSpec {
  int resolution = 128;
  int keyframes = 8;
  double noise = 0.0;  // uniform in [-noise, noise] per channel
  std::uint64_t seed = 0;
  std::map<std::string, GroupProgram> groups;  // by group id
  std::map<std::string, OffsetProgram> paths;  // by path id
};

/// Strict JSON form: {"resolution", "keyframes", "noise", "seed",
/// "groups": {id: {"tx", "ty", "rotation_deg", "log_scale"}},
/// "paths": {id: {"amplitude", "frequency"}}}.
SyntheticSpec synthetic_spec_from_json(std::string_view text);

struct SyntheticTarget {
  CanonicalGeometry geometry;
  MotionParams truth;
  std::vector<RasterFrame> frames;
};

/// Ground-truth parameters of `spec` for `doc` (no rendering).
MotionParams synthetic_params(const CanonicalGeometry& geom, const SvgDocument& doc, const SyntheticSpec& spec);
SyntheticTarget synth_target(const SvgDocument& doc, const SyntheticSpec& spec);

/// Intersection over union of the foreground masks; 1 when both are empty.
double foreground_iou(const RasterFrame& a, const RasterFrame& b, double white_thresh = 0.98);
double pixel_mse(const RasterFrame& a, const RasterFrame& b);

struct EvalReport {
  std::vector<double> mse;  // per keyframe
  std::vector<double> iou;  // per keyframe
  std::vector<double> translation_error;  // per group, pixels, mean over keyframes
  std::vector<double> rotation_error;     // per group, degrees, mean over keyframes
  double seconds = 0.0;
  double iterations_per_second = 0.0;

  std::string to_json() const;
};

/// Renders every keyframe of `fitted` at the geometry's working size and
/// compares it with the matching target frame.
EvalReport eval_fit(const CanonicalGeometry& geom, const MotionParams& fitted,
                    const std::vector<RasterFrame>& frames, const MotionParams* truth = nullptr);

/// Entry point of the command-line tool.
int cli_main(int argc, char** argv);

}  // namespace vecfit
