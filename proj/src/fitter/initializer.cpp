#include "vecfit/error.hpp"
#include "vecfit/fitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vecfit {

KeyframeSlice keyframe_slice(const MotionParams& params, int k) {
  return {params.homographies[k], params.offsets[k]};
}

void set_keyframe_slice(MotionParams& params, int k, const KeyframeSlice& slice) {
  if (slice.homographies.cols() != params.homographies[k].cols() || slice.offsets.cols() != params.offsets[k].cols())
    throw DimensionMismatch("keyframe slice does not match the motion parameters");
  params.homographies[k] = slice.homographies;
  params.offsets[k] = slice.offsets;
}

Eigen::Vector2i best_translation(const ForegroundMask& source, const ForegroundMask& target, int radius,
                                 int stride) {
  if (source.width() != target.width() || source.height() != target.height())
    throw DimensionMismatch("best_translation: masks differ in size");
  if (source.count() == 0 || target.count() == 0) return Eigen::Vector2i::Zero();
  const int w = source.width();
  const int h = source.height();
  std::vector<Eigen::Vector2i> pixels;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (source.bits(y, x)) pixels.emplace_back(x, y);

  stride = std::max(stride, 1);
  const int reach = radius / stride * stride;
  Eigen::Vector2i best = Eigen::Vector2i::Zero();
  long best_overlap = -1;
  long best_length = std::numeric_limits<long>::max();
  for (int dy = -reach; dy <= reach; dy += stride)
    for (int dx = -reach; dx <= reach; dx += stride) {
      long overlap = 0;
      for (const Eigen::Vector2i& p : pixels) {
        const int x = p.x() + dx;
        const int y = p.y() + dy;
        if (x >= 0 && x < w && y >= 0 && y < h && target.bits(y, x)) ++overlap;
      }
      const long length = static_cast<long>(dx) * dx + static_cast<long>(dy) * dy;
      if (overlap > best_overlap || (overlap == best_overlap && length < best_length)) {
        best_overlap = overlap;
        best_length = length;
        best = {dx, dy};
      }
    }
  return best;
}

namespace {

// Coverage >= 0.5 of the given document paths at keyframe k.
ForegroundMask support_mask(const CanonicalGeometry& geom, const Eigen::Matrix2Xd& points,
                            const std::vector<int>& paths, const RenderOptions& options) {
  Scene scene;
  for (int p : geom.painter_order) {
    if (std::find(paths.begin(), paths.end(), p) == paths.end()) continue;
    const CanonicalGeometry::PathSpan& span = geom.paths[p];
    RenderPath rp;
    rp.subpath_sizes = span.subpath_sizes;
    rp.points = points.middleCols(span.first, span.count);
    rp.fill = Rgb::Zero();
    rp.source = p;
    scene.paths.push_back(std::move(rp));
  }
  const RasterFrame frame = render(scene, geom.width, geom.height, options);
  ForegroundMask mask;
  mask.bits = frame.rgb[0] < 0.5;
  return mask;
}

std::vector<int> group_paths(const CanonicalGeometry& geom, int group) {
  std::vector<int> paths;
  for (std::size_t p = 0; p < geom.paths.size(); ++p)
    if (geom.paths[p].group == group) paths.push_back(static_cast<int>(p));
  return paths;
}

}  // namespace

KeyframeSlice translation_probe_initializer(const InitializerContext& context) {
  const CanonicalGeometry& geom = context.geometry;
  KeyframeSlice slice = keyframe_slice(context.params, context.keyframe);
  const Eigen::Matrix2Xd points = deform_keyframe(geom, context.params, context.keyframe, ProjectionGuard::Clamp);
  const int radius = static_cast<int>(std::floor(0.1 * std::max(geom.width, geom.height)));
  for (int g = 0; g < geom.group_count; ++g) {
    if (g >= static_cast<int>(context.group_masks.size())) break;
    const ForegroundMask source = support_mask(geom, points, group_paths(geom, g), context.render);
    const Eigen::Vector2i shift = best_translation(source, context.group_masks[g], radius, 2);
    slice.homographies(kTx, g) += shift.x();
    slice.homographies(kTy, g) += shift.y();
  }
  return slice;
}

int candidate_select(const InitializerContext& context, int path, const std::vector<KeyframeSlice>& candidates) {
  if (candidates.empty()) throw ConfigError("candidate_select needs at least one candidate");
  if (candidates.size() == 1) return 0;
  const CanonicalGeometry& geom = context.geometry;
  const CanonicalGeometry::PathSpan& span = geom.paths.at(static_cast<std::size_t>(path));
  const Eigen::Matrix2Xd base = deform_keyframe(geom, context.params, context.keyframe, ProjectionGuard::Clamp);
  const ForegroundMask* target_mask =
      path < static_cast<int>(context.path_masks.size()) ? &context.path_masks[path] : nullptr;

  int best = 0;
  double best_error = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    MotionParams trial = context.params;
    set_keyframe_slice(trial, context.keyframe, candidates[c]);
    const Eigen::Matrix3d h = keyframe_homography(trial, context.keyframe, span.group);
    Eigen::Matrix2Xd points = base;
    points.middleCols(span.first, span.count) =
        apply_motion(geom.rest.middleCols(span.first, span.count), candidates[c].offsets.middleCols(span.first, span.count),
                     h, ProjectionGuard::Clamp);
    const RasterFrame frame = render(scene_from_points(geom, points), geom.width, geom.height, context.render);
    ForegroundMask region = support_mask(geom, points, {path}, context.render);
    if (target_mask) region.bits = region.bits || target_mask->bits;
    double error = 0.0;
    const std::size_t count = region.count();
    if (count > 0) {
      for (int ch = 0; ch < 3; ++ch)
        error += region.bits.select((frame.rgb[ch] - context.target.clean.rgb[ch]).square(), 0.0).sum();
      error /= 3.0 * static_cast<double>(count);
    }
    if (error < best_error) {
      best_error = error;
      best = static_cast<int>(c);
    }
  }
  return best;
}

KeyframeSlice merge_candidates(const CanonicalGeometry& geom, const MotionParams& params,
                               const KeyframeSlice& copy, const KeyframeSlice& proposal,
                               const std::vector<int>& path_choice) {
  KeyframeSlice merged = copy;
  for (int g = 0; g < geom.group_count; ++g) {
    const std::vector<int> paths = group_paths(geom, g);
    int chosen = 0;
    for (int p : paths) chosen += path_choice[p] != 0;
    if (chosen == 0) continue;
    if (chosen == static_cast<int>(paths.size())) {
      merged.homographies.col(g) = proposal.homographies.col(g);
      for (int p : paths) {
        const auto& span = geom.paths[p];
        merged.offsets.middleCols(span.first, span.count) = proposal.offsets.middleCols(span.first, span.count);
      }
      continue;
    }
    const Point center = params.centers.col(g);
    const Eigen::Matrix3d h_copy = compose_homography<double>(copy.homographies.col(g), center);
    const Eigen::Matrix3d h_prop = compose_homography<double>(proposal.homographies.col(g), center);
    const Eigen::Matrix3d h_copy_inv = h_copy.inverse();
    for (int p : paths) {
      if (!path_choice[p]) continue;
      const auto& span = geom.paths[p];
      Eigen::Matrix2Xd folded(2, span.count);
      bool ok = true;
      for (int i = 0; i < span.count && ok; ++i) {
        const int idx = span.first + i;
        const Eigen::Vector3d y = h_prop * (geom.rest.col(idx) + proposal.offsets.col(idx)).homogeneous();
        if (!(y.z() > kMinProjectiveW)) ok = false;
        const Eigen::Vector3d z = h_copy_inv * Eigen::Vector3d(y.x() / y.z(), y.y() / y.z(), 1.0);
        if (!(z.z() > kMinProjectiveW)) ok = false;
        folded.col(i) = z.head<2>() / z.z() - geom.rest.col(idx);
      }
      if (ok && folded.allFinite()) merged.offsets.middleCols(span.first, span.count) = folded;
    }
  }
  return merged;
}

}  // namespace vecfit
