#include "vecfit/error.hpp"
#include "vecfit/export.hpp"
#include "vecfit/fitter.hpp"
#include "vecfit/harness.hpp"

#include "json.hpp"

#include <cmath>

namespace vecfit {

double foreground_iou(const RasterFrame& a, const RasterFrame& b, double white_thresh) {
  if (a.width() != b.width() || a.height() != b.height())
    throw DimensionMismatch("IoU: frames are " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                            " and " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  const BitImage ma = foreground_mask(a, white_thresh).bits;
  const BitImage mb = foreground_mask(b, white_thresh).bits;
  const auto uni = (ma || mb).count();
  if (uni == 0) return 1.0;
  return static_cast<double>((ma && mb).count()) / static_cast<double>(uni);
}

double pixel_mse(const RasterFrame& a, const RasterFrame& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw DimensionMismatch("MSE: frames differ in size");
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) sum += (a.rgb[c] - b.rgb[c]).square().sum();
  return sum / (3.0 * a.width() * a.height());
}

EvalReport eval_fit(const CanonicalGeometry& geom, const MotionParams& fitted,
                    const std::vector<RasterFrame>& frames, const MotionParams* truth) {
  EvalReport report;
  const std::vector<RasterFrame> targets = keyframe_targets(geom, frames, fitted.keyframes());
  RenderOptions options;
  options.softness = kExportSoftness;
  for (int k = 0; k < fitted.keyframes(); ++k) {
    const Eigen::Matrix2Xd points = deform_keyframe(geom, fitted, k, ProjectionGuard::Clamp);
    const RasterFrame rendered = render(scene_from_points(geom, points), geom.width, geom.height, options);
    report.mse.push_back(pixel_mse(rendered, targets[k]));
    report.iou.push_back(foreground_iou(rendered, targets[k]));
  }
  if (truth) {
    if (!truth->same_shape(fitted)) throw DimensionMismatch("ground truth and fit differ in shape");
    for (int g = 0; g < fitted.groups(); ++g) {
      double t = 0.0;
      double r = 0.0;
      for (int k = 0; k < fitted.keyframes(); ++k) {
        const Eigen::Vector2d dt(fitted.homographies[k](kTx, g) - truth->homographies[k](kTx, g),
                                 fitted.homographies[k](kTy, g) - truth->homographies[k](kTy, g));
        t += dt.norm();
        r += std::abs(fitted.homographies[k](kTheta, g) - truth->homographies[k](kTheta, g)) * 180.0 /
             3.14159265358979323846;
      }
      report.translation_error.push_back(t / fitted.keyframes());
      report.rotation_error.push_back(r / fitted.keyframes());
    }
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["mse"] = mse;
  j["iou"] = iou;
  if (!translation_error.empty()) {
    j["translation_error_px"] = translation_error;
    j["rotation_error_deg"] = rotation_error;
  }
  j["seconds"] = seconds;
  j["iterations_per_second"] = iterations_per_second;
  return j.dump(2) + "\n";
}

}  // namespace vecfit
