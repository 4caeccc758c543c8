#include "vecfit/error.hpp"
#include "vecfit/raster.hpp"

#include <algorithm>
#include <cmath>

namespace vecfit {

namespace {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Crossing {
  double x;
  int dir;
};

struct PathRaster {
  std::vector<OutlineVertex> vertices;
  std::vector<std::array<int, 2>> edges;
};

PathRaster build_edges(const RenderPath& path, const RenderOptions& options,
                       const TessellationPlan* plan) {
  PathRaster out;
  const FlattenedOutline outline = flatten(path, options.flatten_tolerance, plan);
  for (const FlattenedSubpath& sub : outline.subpaths) {
    const int first = static_cast<int>(out.vertices.size());
    const int m = static_cast<int>(sub.vertices.size());
    out.vertices.insert(out.vertices.end(), sub.vertices.begin(), sub.vertices.end());
    if (m < 2) continue;
    for (int i = 0; i < m; ++i) out.edges.push_back({first + i, first + (i + 1) % m});
  }
  return out;
}

}  // namespace

double coverage(double d, double softness, double band) {
  if (d >= band) return 0.0;
  if (d <= -band) return 1.0;
  const double lo = logistic(-band / softness);
  const double hi = logistic(band / softness);
  return std::clamp((logistic(-d / softness) - lo) / (hi - lo), 0.0, 1.0);
}

double coverage_derivative(double d, double softness, double band) {
  if (d >= band || d <= -band) return 0.0;
  const double lo = logistic(-band / softness);
  const double hi = logistic(band / softness);
  const double s = logistic(-d / softness);
  return -s * (1.0 - s) / softness / (hi - lo);
}

RasterFrame render(const Scene& scene, int width, int height, const RenderOptions& options,
                   RenderTape* tape, const ScenePlan* plan) {
  if (plan != nullptr && plan->size() != scene.paths.size())
    throw DimensionMismatch("render: tessellation plan does not match the scene");
  RasterFrame out(width, height, 1.0);
  const double band = options.band();
  const double band2 = band * band;
  const double lo = logistic(-band / options.softness);
  const double hi = logistic(band / options.softness);
  if (tape != nullptr) {
    tape->width = width;
    tape->height = height;
    tape->paths.clear();
    tape->paths.resize(scene.paths.size());
  }

  std::vector<double> best_d2;
  std::vector<int> best_edge;
  std::vector<double> best_t;
  std::vector<std::vector<Crossing>> rows;

  for (std::size_t p = 0; p < scene.paths.size(); ++p) {
    const RenderPath& path = scene.paths[p];
    PathRaster geom = build_edges(path, options, plan ? &(*plan)[p] : nullptr);
    RenderTape::PathTape* pt = tape ? &tape->paths[p] : nullptr;

    if (geom.edges.empty()) {
      if (pt != nullptr) {
        pt->vertices = std::move(geom.vertices);
        pt->alpha.resize(0, 0);
      }
      continue;
    }

    double minx = geom.vertices[0].position.x(), maxx = minx;
    double miny = geom.vertices[0].position.y(), maxy = miny;
    for (const OutlineVertex& v : geom.vertices) {
      minx = std::min(minx, v.position.x());
      maxx = std::max(maxx, v.position.x());
      miny = std::min(miny, v.position.y());
      maxy = std::max(maxy, v.position.y());
    }
    // Pixels whose centers lie within `band` of the outline bounding box.
    const int x0 = std::max(0, static_cast<int>(std::ceil(minx - band - 0.5)));
    const int x1 = std::min(width, static_cast<int>(std::floor(maxx + band - 0.5)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::ceil(miny - band - 0.5)));
    const int y1 = std::min(height, static_cast<int>(std::floor(maxy + band - 0.5)) + 1);
    if (pt != nullptr) {
      pt->x0 = x0;
      pt->y0 = y0;
      pt->alpha = Image::Zero(std::max(0, y1 - y0), std::max(0, x1 - x0));
    }
    if (x1 <= x0 || y1 <= y0) {
      if (pt != nullptr) {
        pt->vertices = std::move(geom.vertices);
        pt->edges = std::move(geom.edges);
      }
      continue;
    }
    const int rw = x1 - x0;
    const int rh = y1 - y0;
    best_d2.assign(static_cast<std::size_t>(rw) * rh, band2);
    best_edge.assign(static_cast<std::size_t>(rw) * rh, -1);
    best_t.assign(static_cast<std::size_t>(rw) * rh, 0.0);

    // Exact distances inside the band.
    for (std::size_t e = 0; e < geom.edges.size(); ++e) {
      const Point a = geom.vertices[geom.edges[e][0]].position;
      const Point b = geom.vertices[geom.edges[e][1]].position;
      const Point d = b - a;
      const double len2 = d.squaredNorm();
      const int ex0 = std::max(x0, static_cast<int>(std::ceil(std::min(a.x(), b.x()) - band - 0.5)));
      const int ex1 = std::min(x1, static_cast<int>(std::floor(std::max(a.x(), b.x()) + band - 0.5)) + 1);
      const int ey0 = std::max(y0, static_cast<int>(std::ceil(std::min(a.y(), b.y()) - band - 0.5)));
      const int ey1 = std::min(y1, static_cast<int>(std::floor(std::max(a.y(), b.y()) + band - 0.5)) + 1);
      for (int y = ey0; y < ey1; ++y) {
        const double cy = y + 0.5;
        int xs = ex0;
        int xe = ex1;
        // Restrict long slanted edges to the part of the row near the edge.
        if (std::abs(d.y()) > 1e-12 && std::abs(d.x()) > 1e-12) {
          const double inv_sin = std::sqrt(len2) / std::abs(d.y());
          const double t_row = (cy - a.y()) / d.y();
          const double xc = a.x() + t_row * d.x();
          const double half = band * inv_sin;
          xs = std::max(xs, static_cast<int>(std::floor(xc - half - 0.5)));
          xe = std::min(xe, static_cast<int>(std::ceil(xc + half - 0.5)) + 1);
        }
        const std::size_t row = static_cast<std::size_t>(y - y0) * rw;
        for (int x = xs; x < xe; ++x) {
          const Point q(x + 0.5 - a.x(), cy - a.y());
          double t = len2 > 0.0 ? std::clamp(q.dot(d) / len2, 0.0, 1.0) : 0.0;
          const double d2 = (q - t * d).squaredNorm();
          const std::size_t idx = row + (x - x0);
          if (d2 < best_d2[idx]) {
            best_d2[idx] = d2;
            best_edge[idx] = static_cast<int>(e);
            best_t[idx] = t;
          }
        }
      }
    }

    // Nonzero winding per row from sorted edge crossings at pixel centers.
    rows.assign(rh, {});
    for (const auto& edge : geom.edges) {
      const Point a = geom.vertices[edge[0]].position;
      const Point b = geom.vertices[edge[1]].position;
      if (a.y() == b.y()) continue;
      const int dir = b.y() > a.y() ? 1 : -1;
      const double ylo = std::min(a.y(), b.y());
      const double yhi = std::max(a.y(), b.y());
      // Rows whose center satisfies ylo <= cy < yhi.
      const int r0 = std::max(y0, static_cast<int>(std::ceil(ylo - 0.5)));
      const int r1 = std::min(y1, static_cast<int>(std::ceil(yhi - 0.5)));
      const double slope = (b.x() - a.x()) / (b.y() - a.y());
      for (int y = r0; y < r1; ++y) {
        const double cy = y + 0.5;
        rows[y - y0].push_back({a.x() + (cy - a.y()) * slope, dir});
      }
    }

    const Rgb& fill = path.fill;
    for (int y = y0; y < y1; ++y) {
      auto& crossings = rows[y - y0];
      std::sort(crossings.begin(), crossings.end(),
                [](const Crossing& l, const Crossing& r) { return l.x < r.x; });
      std::size_t next = 0;
      int winding = 0;
      const std::size_t row = static_cast<std::size_t>(y - y0) * rw;
      for (int x = x0; x < x1; ++x) {
        const double cx = x + 0.5;
        while (next < crossings.size() && crossings[next].x < cx) winding += crossings[next++].dir;
        const std::size_t idx = row + (x - x0);
        const bool inside = winding != 0;
        const int edge = best_edge[idx];
        double alpha;
        double signed_d = 0.0;
        if (edge < 0) {
          alpha = inside ? 1.0 : 0.0;
        } else {
          const double dist = std::sqrt(best_d2[idx]);
          signed_d = inside ? -dist : dist;
          alpha = std::clamp((logistic(-signed_d / options.softness) - lo) / (hi - lo), 0.0, 1.0);
        }
        if (alpha == 0.0 && edge < 0) continue;
        const Eigen::Vector3d below(out.rgb[0](y, x), out.rgb[1](y, x), out.rgb[2](y, x));
        if (pt != nullptr) {
          pt->alpha(y - y0, x - x0) = alpha;
          if (edge >= 0) {
            const auto& ev = geom.edges[edge];
            const Point a = geom.vertices[ev[0]].position;
            const Point b = geom.vertices[ev[1]].position;
            const double t = best_t[idx];
            RenderTape::BandSample sample;
            sample.pixel = y * width + x;
            sample.edge = edge;
            sample.t = t;
            sample.dalpha_dd = coverage_derivative(signed_d, options.softness, band);
            sample.below = below;
            bool keep = true;
            const Point e = b - a;
            const double len = e.norm();
            const Point offset = Point(cx, y + 0.5) - (a + t * (b - a));
            const double s = inside ? -1.0 : 1.0;
            const bool interior = t > 0.0 && t < 1.0 && len > 0.0;
            const Point n_pos = len > 0.0 ? Point(Point(-e.y(), e.x()) / len) : Point::Zero();
            const double side = offset.dot(n_pos);
            if (interior && side != 0.0) {
              // offset/dist is rounding noise when the center is nearly on the edge
              sample.dd_dq = side > 0.0 ? Point(-s * n_pos) : Point(s * n_pos);
            } else if (!interior && offset.squaredNorm() > 0.0) {
              sample.dd_dq = -s * offset / offset.norm();
            } else {
              // Center exactly on the edge: the signed distance moves with the
              // outward normal. Winding on the far side differs by one; the
              // pixel counts as left of a crossing, or below a horizontal edge.
              const bool pixel_positive = e.y() != 0.0 ? e.y() > 0.0 : e.x() > 0.0;
              const int w_pos = pixel_positive ? winding : winding - 1;
              const int w_neg = w_pos + 1;
              keep = len > 0.0 && ((w_pos == 0) != (w_neg == 0));
              if (keep) sample.dd_dq = w_pos == 0 ? Point(-n_pos) : n_pos;
            }
            if (keep) pt->band.push_back(sample);
          }
        }
        for (int c = 0; c < 3; ++c) out.rgb[c](y, x) = alpha * fill[c] + (1.0 - alpha) * below[c];
      }
    }
    if (pt != nullptr) {
      pt->vertices = std::move(geom.vertices);
      pt->edges = std::move(geom.edges);
    }
  }
  return out;
}

std::vector<Eigen::Matrix2Xd> render_backward(const Scene& scene, const RenderTape& tape,
                                              const RasterFrame& upstream) {
  if (upstream.width() != tape.width || upstream.height() != tape.height)
    throw DimensionMismatch("render_backward: upstream image size does not match the render");
  if (tape.paths.size() != scene.paths.size())
    throw DimensionMismatch("render_backward: tape does not match the scene");
  std::vector<Eigen::Matrix2Xd> grads(scene.paths.size());
  const int width = tape.width;
  // Transmittance of everything painted after the current path.
  Image transmittance = Image::Ones(tape.height, tape.width);

  for (std::size_t p = scene.paths.size(); p-- > 0;) {
    const RenderPath& path = scene.paths[p];
    const RenderTape::PathTape& pt = tape.paths[p];
    grads[p] = Eigen::Matrix2Xd::Zero(2, path.points.cols());
    if (pt.alpha.size() == 0) continue;

    Eigen::Matrix2Xd vertex_grad = Eigen::Matrix2Xd::Zero(2, static_cast<Eigen::Index>(pt.vertices.size()));
    for (const RenderTape::BandSample& s : pt.band) {
      const int x = s.pixel % width;
      const int y = s.pixel / width;
      const double trans = transmittance(y, x);
      if (trans == 0.0 || s.dalpha_dd == 0.0) continue;
      double g_alpha = 0.0;
      for (int c = 0; c < 3; ++c) g_alpha += upstream.rgb[c](y, x) * (path.fill[c] - s.below[c]);
      g_alpha *= trans;
      if (g_alpha == 0.0) continue;
      const Point g_q = g_alpha * s.dalpha_dd * s.dd_dq;
      const auto& edge = pt.edges[s.edge];
      vertex_grad.col(edge[0]) += (1.0 - s.t) * g_q;
      vertex_grad.col(edge[1]) += s.t * g_q;
    }
    for (std::size_t v = 0; v < pt.vertices.size(); ++v) {
      const OutlineVertex& vert = pt.vertices[v];
      for (int k = 0; k < 4; ++k) grads[p].col(vert.control[k]) += vert.weights[k] * vertex_grad.col(v);
    }
    const auto rows = pt.alpha.rows();
    const auto cols = pt.alpha.cols();
    transmittance.block(pt.y0, pt.x0, rows, cols) *= (1.0 - pt.alpha);
  }
  return grads;
}

std::vector<Eigen::Matrix2Xd> render_backward(const Scene& scene, int width, int height,
                                              const RenderOptions& options,
                                              const RasterFrame& upstream, const ScenePlan* plan) {
  RenderTape tape;
  render(scene, width, height, options, &tape, plan);
  return render_backward(scene, tape, upstream);
}

}  // namespace vecfit
