#include "vecfit/motion.hpp"

#include "vecfit/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>

namespace vecfit {

HomographyJacobian homography_jacobian(const HomographyParams& h, const Point& center) {
  using Mat = Eigen::Matrix3d;
  // Factors in product order: P T Tc R Sh S Tmc.
  std::array<Mat, 7> f;
  for (Mat& m : f) m.setIdentity();
  f[0](2, 0) = h[kP1];
  f[0](2, 1) = h[kP2];
  f[1](0, 2) = h[kTx];
  f[1](1, 2) = h[kTy];
  f[2](0, 2) = center.x();
  f[2](1, 2) = center.y();
  const double c = std::cos(h[kTheta]);
  const double s = std::sin(h[kTheta]);
  f[3] << c, -s, 0, s, c, 0, 0, 0, 1;
  f[4](0, 1) = h[kShear];
  f[5](0, 0) = std::exp(h[kSx]);
  f[5](1, 1) = std::exp(h[kSy]);
  f[6](0, 2) = -center.x();
  f[6](1, 2) = -center.y();

  std::array<Mat, 8> prefix;  // prefix[i] = f[0] ... f[i-1]
  std::array<Mat, 8> suffix;  // suffix[i] = f[i] ... f[6]
  prefix[0].setIdentity();
  for (int i = 0; i < 7; ++i) prefix[i + 1] = prefix[i] * f[i];
  suffix[7].setIdentity();
  for (int i = 6; i >= 0; --i) suffix[i] = f[i] * suffix[i + 1];
  auto through = [&](int factor, const Mat& d) -> Mat { return prefix[factor] * d * suffix[factor + 1]; };
  auto unit = [](int r, int col, double v) {
    Mat m = Mat::Zero();
    m(r, col) = v;
    return m;
  };

  HomographyJacobian j;
  j.params[kTx] = through(1, unit(0, 2, 1.0));
  j.params[kTy] = through(1, unit(1, 2, 1.0));
  Mat dr = Mat::Zero();
  dr(0, 0) = -s;
  dr(0, 1) = -c;
  dr(1, 0) = c;
  dr(1, 1) = -s;
  j.params[kTheta] = through(3, dr);
  j.params[kSx] = through(5, unit(0, 0, f[5](0, 0)));
  j.params[kSy] = through(5, unit(1, 1, f[5](1, 1)));
  j.params[kShear] = through(4, unit(0, 1, 1.0));
  j.params[kP1] = through(0, unit(2, 0, 1.0));
  j.params[kP2] = through(0, unit(2, 1, 1.0));
  for (int axis = 0; axis < 2; ++axis)
    j.center[axis] = through(2, unit(axis, 2, 1.0)) + through(6, unit(axis, 2, -1.0));
  return j;
}

namespace {

struct Projected {
  Point point;
  Eigen::Vector3d homogeneous;
  double w;  // after clamping
};

Projected project(const Eigen::Matrix3d& homography, const Point& source, ProjectionGuard guard) {
  Projected p;
  p.homogeneous = homography * Eigen::Vector3d(source.x(), source.y(), 1.0);
  p.w = p.homogeneous.z();
  if (!(p.w > kMinProjectiveW)) {
    if (guard == ProjectionGuard::Throw)
      throw DegenerateProjection("homogeneous w = " + std::to_string(p.w) + " at point (" +
                                 std::to_string(source.x()) + ", " + std::to_string(source.y()) + ")");
    p.w = kMinProjectiveW;
  }
  p.point = p.homogeneous.head<2>() / p.w;
  return p;
}

}  // namespace

Eigen::Matrix2Xd apply_motion(const Eigen::Ref<const Eigen::Matrix2Xd>& rest,
                              const Eigen::Ref<const Eigen::Matrix2Xd>& offsets,
                              const Eigen::Matrix3d& homography, ProjectionGuard guard) {
  if (rest.cols() != offsets.cols())
    throw DimensionMismatch("apply_motion: " + std::to_string(rest.cols()) + " points but " +
                            std::to_string(offsets.cols()) + " offsets");
  Eigen::Matrix2Xd out(2, rest.cols());
  for (Eigen::Index i = 0; i < rest.cols(); ++i)
    out.col(i) = project(homography, rest.col(i) + offsets.col(i), guard).point;
  return out;
}

CanonicalGeometry make_geometry(const SvgDocument& doc, double pixels_per_unit) {
  CanonicalGeometry g;
  g.pixels_per_unit = pixels_per_unit;
  g.width = std::max(1, static_cast<int>(std::lround(doc.canvas_width * pixels_per_unit)));
  g.height = std::max(1, static_cast<int>(std::lround(doc.canvas_height * pixels_per_unit)));
  g.rest = flatten_params(doc).points * pixels_per_unit;
  g.group_count = static_cast<int>(doc.groups.size());
  g.painter_order = doc.painter_order;
  const std::vector<int> offsets = path_offsets(doc);
  for (std::size_t p = 0; p < doc.paths.size(); ++p) {
    CanonicalGeometry::PathSpan span;
    span.first = offsets[p];
    span.count = offsets[p + 1] - offsets[p];
    span.group = doc.paths[p].group;
    for (const Subpath& s : doc.paths[p].subpaths) span.subpath_sizes.push_back(static_cast<int>(s.points.size()));
    for (int i = 0; i < span.count; ++i) {
      g.point_group.push_back(span.group);
      g.point_path.push_back(static_cast<int>(p));
    }
    g.fills.push_back(doc.paths[p].fill);
    g.paths.push_back(std::move(span));
  }
  SvgDocument copy = doc;
  copy.update_centroids();
  for (const Group& group : copy.groups) g.group_centroids.push_back(group.centroid * pixels_per_unit);
  return g;
}

CanonicalGeometry make_geometry_for_resolution(const SvgDocument& doc, int resolution) {
  const double side = std::max(doc.canvas_width, doc.canvas_height);
  if (!(side > 0.0)) throw MalformedDocument("canvas has no extent");
  if (resolution < 1) throw ConfigError("resolution must be positive");
  return make_geometry(doc, resolution / side);
}

Scene scene_from_points(const CanonicalGeometry& geom, const Eigen::Matrix2Xd& points) {
  if (points.cols() != geom.point_count())
    throw DimensionMismatch("scene_from_points: expected " + std::to_string(geom.point_count()) +
                            " points, got " + std::to_string(points.cols()));
  Scene scene;
  scene.paths.reserve(geom.painter_order.size());
  for (int p : geom.painter_order) {
    const CanonicalGeometry::PathSpan& span = geom.paths[p];
    RenderPath rp;
    rp.subpath_sizes = span.subpath_sizes;
    rp.points = points.middleCols(span.first, span.count);
    rp.fill = geom.fills[p];
    rp.source = p;
    scene.paths.push_back(std::move(rp));
  }
  return scene;
}

MotionParams MotionParams::zeros_like() const {
  MotionParams z;
  z.centers = Eigen::Matrix2Xd::Zero(2, centers.cols());
  z.global_center = global_center;
  for (const auto& h : homographies) z.homographies.push_back(Eigen::Matrix<double, 8, Eigen::Dynamic>::Zero(8, h.cols()));
  for (const auto& o : offsets) z.offsets.push_back(Eigen::Matrix2Xd::Zero(2, o.cols()));
  return z;
}

bool MotionParams::same_shape(const MotionParams& other) const {
  if (keyframes() != other.keyframes() || groups() != other.groups() ||
      offsets.size() != other.offsets.size())
    return false;
  for (std::size_t k = 0; k < homographies.size(); ++k)
    if (homographies[k].cols() != other.homographies[k].cols()) return false;
  for (std::size_t k = 0; k < offsets.size(); ++k)
    if (offsets[k].cols() != other.offsets[k].cols()) return false;
  return true;
}

Eigen::VectorXd MotionParams::pack() const {
  Eigen::Index n = centers.size();
  for (std::size_t k = 0; k < homographies.size(); ++k) n += homographies[k].size() + offsets[k].size();
  Eigen::VectorXd flat(n);
  Eigen::Index at = 0;
  auto put = [&](const auto& m) {
    flat.segment(at, m.size()) = m.reshaped();
    at += m.size();
  };
  put(centers);
  for (std::size_t k = 0; k < homographies.size(); ++k) {
    put(homographies[k]);
    put(offsets[k]);
  }
  return flat;
}

void MotionParams::unpack(const Eigen::VectorXd& flat) {
  Eigen::Index at = 0;
  auto take = [&](auto& m) {
    if (at + m.size() > flat.size()) throw DimensionMismatch("MotionParams::unpack: vector too short");
    m.reshaped() = flat.segment(at, m.size());
    at += m.size();
  };
  take(centers);
  for (std::size_t k = 0; k < homographies.size(); ++k) {
    take(homographies[k]);
    take(offsets[k]);
  }
  if (at != flat.size()) throw DimensionMismatch("MotionParams::unpack: vector too long");
}

MotionParams init_params(const CanonicalGeometry& geom, int keyframes) {
  if (keyframes < 1) throw ConfigError("keyframe count must be at least 1");
  MotionParams params;
  params.centers.resize(2, geom.group_count);
  for (int g = 0; g < geom.group_count; ++g) params.centers.col(g) = geom.group_centroids[g];
  params.global_center = geom.canvas_center();
  for (int k = 0; k < keyframes; ++k) {
    params.homographies.push_back(Eigen::Matrix<double, 8, Eigen::Dynamic>::Zero(8, geom.group_count));
    params.offsets.push_back(Eigen::Matrix2Xd::Zero(2, geom.point_count()));
  }
  return params;
}

Eigen::Matrix3d keyframe_homography(const MotionParams& params, int keyframe, int group) {
  const HomographyParams h = params.homographies[keyframe].col(group);
  const Point c = params.centers.col(group);
  return compose_homography<double>(h, c);
}

namespace {

std::vector<Eigen::Matrix3d> keyframe_homographies(const MotionParams& params, int k) {
  std::vector<Eigen::Matrix3d> hs;
  hs.reserve(params.groups());
  for (int g = 0; g < params.groups(); ++g) hs.push_back(keyframe_homography(params, k, g));
  return hs;
}

void check_keyframe(const CanonicalGeometry& geom, const MotionParams& params, int k) {
  if (k < 0 || k >= params.keyframes())
    throw DimensionMismatch("keyframe " + std::to_string(k) + " out of range (K = " +
                            std::to_string(params.keyframes()) + ")");
  if (params.offsets[k].cols() != geom.point_count() || params.groups() != geom.group_count)
    throw DimensionMismatch("motion parameters do not match the document (" +
                            std::to_string(params.offsets[k].cols()) + " offsets for " +
                            std::to_string(geom.point_count()) + " control points)");
}

}  // namespace

Eigen::Matrix2Xd deform_keyframe(const CanonicalGeometry& geom, const MotionParams& params, int k,
                                 ProjectionGuard guard) {
  check_keyframe(geom, params, k);
  const std::vector<Eigen::Matrix3d> hs = keyframe_homographies(params, k);
  Eigen::Matrix2Xd out(2, geom.point_count());
  for (int i = 0; i < geom.point_count(); ++i)
    out.col(i) = project(hs[geom.point_group[i]], geom.rest.col(i) + params.offsets[k].col(i), guard).point;
  return out;
}

KeyframeGradient motion_backward(const CanonicalGeometry& geom, const MotionParams& params, int k,
                                 const Eigen::Matrix2Xd& upstream, ProjectionGuard guard) {
  check_keyframe(geom, params, k);
  if (upstream.cols() != geom.point_count())
    throw DimensionMismatch("motion_backward: upstream has " + std::to_string(upstream.cols()) +
                            " columns, expected " + std::to_string(geom.point_count()));
  const int groups = params.groups();
  const std::vector<Eigen::Matrix3d> hs = keyframe_homographies(params, k);
  std::vector<Eigen::Matrix3d> dh(groups, Eigen::Matrix3d::Zero());

  KeyframeGradient grad;
  grad.offsets = Eigen::Matrix2Xd::Zero(2, geom.point_count());
  grad.homographies = Eigen::Matrix<double, 8, Eigen::Dynamic>::Zero(8, groups);
  grad.centers = Eigen::Matrix2Xd::Zero(2, groups);

  for (int i = 0; i < geom.point_count(); ++i) {
    const Point g = upstream.col(i);
    if (g.isZero(0.0)) continue;
    const int group = geom.point_group[i];
    const Point source = geom.rest.col(i) + params.offsets[k].col(i);
    const Projected p = project(hs[group], source, guard);
    // d(x/w, y/w) / d(x, y, w)
    const Eigen::Vector3d gh(g.x() / p.w, g.y() / p.w,
                             -(g.x() * p.homogeneous.x() + g.y() * p.homogeneous.y()) / (p.w * p.w));
    dh[group] += gh * Eigen::RowVector3d(source.x(), source.y(), 1.0);
    grad.offsets.col(i) = (hs[group].transpose() * gh).head<2>();
  }
  for (int group = 0; group < groups; ++group) {
    if (dh[group].isZero(0.0)) continue;
    const HomographyJacobian j = homography_jacobian(params.homographies[k].col(group), params.centers.col(group));
    for (int q = 0; q < 8; ++q) grad.homographies(q, group) = j.params[q].cwiseProduct(dh[group]).sum();
    for (int a = 0; a < 2; ++a) grad.centers(a, group) = j.center[a].cwiseProduct(dh[group]).sum();
  }
  return grad;
}

std::string motion_to_json(const MotionParams& params, const CanonicalGeometry& geom) {
  using nlohmann::ordered_json;
  ordered_json j;
  ordered_json centers = ordered_json::array();
  for (int g = 0; g < params.groups(); ++g) centers.push_back({params.centers(0, g), params.centers(1, g)});
  j["centers"] = centers;
  ordered_json keyframes = ordered_json::array();
  for (int k = 0; k < params.keyframes(); ++k) {
    ordered_json groups = ordered_json::array();
    for (int g = 0; g < params.groups(); ++g) {
      ordered_json h = ordered_json::array();
      for (int q = 0; q < 8; ++q) h.push_back(params.homographies[k](q, g));
      groups.push_back(h);
    }
    ordered_json offsets = ordered_json::array();
    for (Eigen::Index i = 0; i < params.offsets[k].cols(); ++i)
      offsets.push_back({params.offsets[k](0, i), params.offsets[k](1, i)});
    keyframes.push_back({{"groups", groups}, {"offsets", offsets}});
  }
  j["keyframes"] = keyframes;
  j["global_center"] = {params.global_center.x(), params.global_center.y()};
  j["pixels_per_unit"] = geom.pixels_per_unit;
  j["width"] = geom.width;
  j["height"] = geom.height;
  return j.dump(1) + "\n";
}

namespace {

double finite_number(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError("checkpoint: " + where + " is not a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("checkpoint: " + where + " is not finite");
  return x;
}

Point pair_value(const nlohmann::json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) throw ConfigError("checkpoint: " + where + " must be a 2-element array");
  return {finite_number(v[0], where), finite_number(v[1], where)};
}

}  // namespace

MotionParams motion_from_json(std::string_view text, const CanonicalGeometry& geom) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
  if (!j.is_object() || !j.contains("centers") || !j.contains("keyframes"))
    throw ConfigError("checkpoint: expected an object with 'centers' and 'keyframes'");
  const auto& centers = j["centers"];
  const auto& keyframes = j["keyframes"];
  if (!centers.is_array() || !keyframes.is_array() || keyframes.empty())
    throw ConfigError("checkpoint: 'centers' and 'keyframes' must be arrays, keyframes nonempty");
  if (static_cast<int>(centers.size()) != geom.group_count)
    throw DimensionMismatch("checkpoint has " + std::to_string(centers.size()) + " group centers, document has " +
                            std::to_string(geom.group_count) + " groups");

  // Offsets and centers are stored in the checkpoint's pixel space.
  double scale = 1.0;
  if (j.contains("pixels_per_unit")) {
    const double stored = finite_number(j["pixels_per_unit"], "pixels_per_unit");
    if (!(stored > 0.0)) throw ConfigError("checkpoint: pixels_per_unit must be positive");
    scale = geom.pixels_per_unit / stored;
  }

  MotionParams params = init_params(geom, static_cast<int>(keyframes.size()));
  for (int g = 0; g < geom.group_count; ++g)
    params.centers.col(g) = pair_value(centers[g], "centers[" + std::to_string(g) + "]") * scale;
  for (std::size_t k = 0; k < keyframes.size(); ++k) {
    const auto& kf = keyframes[k];
    const std::string where = "keyframes[" + std::to_string(k) + "]";
    if (!kf.is_object() || !kf.contains("groups") || !kf.contains("offsets") || !kf["groups"].is_array() ||
        !kf["offsets"].is_array())
      throw ConfigError("checkpoint: " + where + " needs 'groups' and 'offsets' arrays");
    if (static_cast<int>(kf["groups"].size()) != geom.group_count)
      throw DimensionMismatch("checkpoint: " + where + " has " + std::to_string(kf["groups"].size()) +
                              " groups, document has " + std::to_string(geom.group_count));
    if (static_cast<int>(kf["offsets"].size()) != geom.point_count())
      throw DimensionMismatch("checkpoint: " + where + " has " + std::to_string(kf["offsets"].size()) +
                              " offsets, document has " + std::to_string(geom.point_count()) + " control points");
    for (int g = 0; g < geom.group_count; ++g) {
      const auto& h = kf["groups"][g];
      if (!h.is_array() || h.size() != 8) throw ConfigError("checkpoint: " + where + " group entries must have 8 values");
      for (int q = 0; q < 8; ++q) params.homographies[k](q, g) = finite_number(h[q], where);
      params.homographies[k](kTx, g) *= scale;
      params.homographies[k](kTy, g) *= scale;
      params.homographies[k](kP1, g) /= scale;
      params.homographies[k](kP2, g) /= scale;
    }
    for (int i = 0; i < geom.point_count(); ++i)
      params.offsets[k].col(i) = pair_value(kf["offsets"][i], where + ".offsets") * scale;
  }
  return params;
}

}  // namespace vecfit
