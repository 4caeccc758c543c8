#include "vecfit/raster.hpp"

#include <algorithm>
#include <cmath>

namespace vecfit {

namespace {

constexpr int kMaxDepth = 24;

double distance_to_chord(const Point& p, const Point& a, const Point& b) {
  const Point d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 <= 1e-24) return (p - a).norm();
  const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

void subdivide(const Point& p0, const Point& p1, const Point& p2, const Point& p3, double t0,
               double t1, double tolerance, int depth, std::vector<double>& ts) {
  const double flatness = std::max(distance_to_chord(p1, p0, p3), distance_to_chord(p2, p0, p3));
  if (flatness <= tolerance || depth >= kMaxDepth) {
    ts.push_back(t1);
    return;
  }
  const Point p01 = (p0 + p1) / 2.0;
  const Point p12 = (p1 + p2) / 2.0;
  const Point p23 = (p2 + p3) / 2.0;
  const Point p012 = (p01 + p12) / 2.0;
  const Point p123 = (p12 + p23) / 2.0;
  const Point mid = (p012 + p123) / 2.0;
  const double tm = (t0 + t1) / 2.0;
  subdivide(p0, p01, p012, mid, t0, tm, tolerance, depth + 1, ts);
  subdivide(mid, p123, p23, p3, tm, t1, tolerance, depth + 1, ts);
}

}  // namespace

std::vector<double> flatten_cubic(const Point& p0, const Point& p1, const Point& p2,
                                  const Point& p3, double tolerance) {
  const double spread = std::max({(p1 - p0).norm(), (p2 - p0).norm(), (p3 - p0).norm()});
  if (spread <= 1e-12) return {0.0};
  std::vector<double> ts{0.0};
  subdivide(p0, p1, p2, p3, 0.0, 1.0, tolerance, 0, ts);
  return ts;
}

TessellationPlan plan_tessellation(const RenderPath& path, double tolerance) {
  TessellationPlan plan;
  int base = 0;
  for (int size : path.subpath_sizes) {
    const int n = size / 3;
    std::vector<std::vector<double>> segments;
    segments.reserve(n);
    for (int j = 0; j < n; ++j) {
      const Point p0 = path.points.col(base + 3 * j);
      const Point p1 = path.points.col(base + 3 * j + 1);
      const Point p2 = path.points.col(base + 3 * j + 2);
      const Point p3 = path.points.col(base + (3 * j + 3) % size);
      std::vector<double> ts = flatten_cubic(p0, p1, p2, p3, tolerance);
      if (ts.size() > 1) ts.pop_back();  // the end is the next segment's start
      segments.push_back(std::move(ts));
    }
    plan.push_back(std::move(segments));
    base += size;
  }
  return plan;
}

ScenePlan plan_scene(const Scene& scene, double tolerance) {
  ScenePlan plans;
  plans.reserve(scene.paths.size());
  for (const RenderPath& p : scene.paths) plans.push_back(plan_tessellation(p, tolerance));
  return plans;
}

FlattenedOutline flatten(const RenderPath& path, double tolerance, const TessellationPlan* plan) {
  const TessellationPlan local = plan == nullptr ? plan_tessellation(path, tolerance) : TessellationPlan{};
  const TessellationPlan& use = plan == nullptr ? local : *plan;
  FlattenedOutline outline;
  outline.subpaths.resize(path.subpath_sizes.size());
  int base = 0;
  for (std::size_t s = 0; s < path.subpath_sizes.size(); ++s) {
    const int size = path.subpath_sizes[s];
    const int n = size / 3;
    auto& vertices = outline.subpaths[s].vertices;
    for (int j = 0; j < n; ++j) {
      const std::array<int, 4> cps{base + 3 * j, base + 3 * j + 1, base + 3 * j + 2,
                                   base + (3 * j + 3) % size};
      for (double t : use[s][j]) {
        OutlineVertex v;
        v.control = cps;
        v.weights = bernstein_weights(t);
        v.position = Point::Zero();
        for (int k = 0; k < 4; ++k) v.position += v.weights[k] * path.points.col(cps[k]);
        vertices.push_back(v);
      }
    }
    base += size;
  }
  return outline;
}

FlattenedOutline flatten(const PathGeometry& path, double tolerance) {
  RenderPath rp;
  rp.points.resize(2, static_cast<Eigen::Index>(path.control_point_count()));
  int k = 0;
  for (const Subpath& s : path.subpaths) {
    rp.subpath_sizes.push_back(static_cast<int>(s.points.size()));
    for (const Point& p : s.points) rp.points.col(k++) = p;
  }
  return flatten(rp, tolerance);
}

Scene make_scene(const SvgDocument& doc, double scale) {
  Scene scene;
  scene.paths.reserve(doc.painter_order.size());
  for (int index : doc.painter_order) {
    const PathGeometry& path = doc.paths[index];
    RenderPath rp;
    rp.fill = path.fill;
    rp.source = index;
    rp.points.resize(2, static_cast<Eigen::Index>(path.control_point_count()));
    int k = 0;
    for (const Subpath& s : path.subpaths) {
      rp.subpath_sizes.push_back(static_cast<int>(s.points.size()));
      for (const Point& p : s.points) rp.points.col(k++) = p * scale;
    }
    scene.paths.push_back(std::move(rp));
  }
  return scene;
}

}  // namespace vecfit
