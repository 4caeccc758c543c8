#include "vecfit/error.hpp"
#include "vecfit/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vecfit {

RasterFrame::RasterFrame(int width, int height, double value) {
  for (Image& c : rgb) c = Image::Constant(height, width, value);
}

std::array<double, 5> gaussian_kernel() {
  std::array<double, 5> w{};
  double sum = 0.0;
  for (int i = -2; i <= 2; ++i) {
    w[i + 2] = std::exp(-0.5 * i * i);
    sum += w[i + 2];
  }
  for (double& v : w) v /= sum;
  return w;
}

namespace {

// out[i] = sum_k w[k] in[clamp(i + k - 2)] along rows (horizontal) or columns.
Image blur_pass(const Image& in, bool horizontal) {
  static const std::array<double, 5> w = gaussian_kernel();
  const int rows = static_cast<int>(in.rows());
  const int cols = static_cast<int>(in.cols());
  Image out(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 5; ++k) {
        if (horizontal) acc += w[k] * in(y, std::clamp(x + k - 2, 0, cols - 1));
        else acc += w[k] * in(std::clamp(y + k - 2, 0, rows - 1), x);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

// Transpose of blur_pass: scatter each input sample back to its taps.
Image blur_pass_adjoint(const Image& in, bool horizontal) {
  static const std::array<double, 5> w = gaussian_kernel();
  const int rows = static_cast<int>(in.rows());
  const int cols = static_cast<int>(in.cols());
  Image out = Image::Zero(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const double v = in(y, x);
      for (int k = 0; k < 5; ++k) {
        if (horizontal) out(y, std::clamp(x + k - 2, 0, cols - 1)) += w[k] * v;
        else out(std::clamp(y + k - 2, 0, rows - 1), x) += w[k] * v;
      }
    }
  }
  return out;
}

void require_same_size(const RasterFrame& frame, const ForegroundMask& mask, const char* what) {
  if (frame.width() != mask.width() || frame.height() != mask.height())
    throw DimensionMismatch(std::string(what) + ": frame is " + std::to_string(frame.width()) + "x" +
                            std::to_string(frame.height()) + ", mask is " +
                            std::to_string(mask.width()) + "x" + std::to_string(mask.height()));
}

// Squared 1D distance transform of f (Felzenszwalb & Huttenlocher lower envelope).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    while (k >= 0) {
      const double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -inf : ((f[q] + q * q) - (f[v[k - 1]] + v[k - 1] * v[k - 1])) / (2.0 * (q - v[k - 1]));
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double diff = q - v[j];
    d[q] = diff * diff + f[v[j]];
  }
}

}  // namespace

RasterFrame gaussian_blur(const RasterFrame& frame) {
  RasterFrame out;
  for (int c = 0; c < 3; ++c) out.rgb[c] = blur_pass(blur_pass(frame.rgb[c], true), false);
  return out;
}

RasterFrame gaussian_blur_adjoint(const RasterFrame& frame) {
  RasterFrame out;
  for (int c = 0; c < 3; ++c)
    out.rgb[c] = blur_pass_adjoint(blur_pass_adjoint(frame.rgb[c], false), true);
  return out;
}

ForegroundMask foreground_mask(const RasterFrame& frame, double white_thresh) {
  ForegroundMask mask;
  mask.bits = frame.rgb[0].min(frame.rgb[1]).min(frame.rgb[2]) < white_thresh;
  return mask;
}

ForegroundMask dilate(const ForegroundMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  ForegroundMask out(w, h, false);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.bits(y, x)) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy;
          const int xx = x + dx;
          if (yy >= 0 && yy < h && xx >= 0 && xx < w) out.bits(yy, xx) = true;
        }
    }
  return out;
}

RasterFrame clean_target(const RasterFrame& frame, const ForegroundMask& mask) {
  require_same_size(frame, mask, "clean_target");
  const ForegroundMask padded = dilate(mask);
  RasterFrame out = frame;
  for (int c = 0; c < 3; ++c) out.rgb[c] = padded.bits.select(frame.rgb[c], 1.0);
  return out;
}

Image euclidean_distance(const ForegroundMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  const double inf = std::numeric_limits<double>::infinity();
  Image sq(h, w);
  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  // Columns first, then rows.
  f.resize(h);
  d.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = mask.bits(y, x) ? 0.0 : inf;
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) sq(y, x) = d[y];
  }
  f.resize(w);
  d.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = sq(y, x);
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) sq(y, x) = d[x];
  }
  return sq.sqrt();
}

SdfMap distance_transform(const ForegroundMask& mask) {
  SdfMap sdf;
  if (mask.count() == 0) {
    // No foreground evidence: the containment term has nothing to pull toward.
    sdf.dist = Image::Zero(mask.height(), mask.width());
    return sdf;
  }
  sdf.dist = (euclidean_distance(mask) - 1.0).max(0.0);
  return sdf;
}

namespace {

struct BilinearCell {
  int x0, y0, x1, y1;
  double fx, fy;
  bool clamped_x, clamped_y;
};

BilinearCell locate(const Point& q, int w, int h) {
  BilinearCell c{};
  double u = q.x() - 0.5;
  double v = q.y() - 0.5;
  c.clamped_x = u <= 0.0 || u >= w - 1;
  c.clamped_y = v <= 0.0 || v >= h - 1;
  u = std::clamp(u, 0.0, static_cast<double>(w - 1));
  v = std::clamp(v, 0.0, static_cast<double>(h - 1));
  c.x0 = std::min(static_cast<int>(std::floor(u)), std::max(0, w - 2));
  c.y0 = std::min(static_cast<int>(std::floor(v)), std::max(0, h - 2));
  c.x1 = std::min(c.x0 + 1, w - 1);
  c.y1 = std::min(c.y0 + 1, h - 1);
  c.fx = u - c.x0;
  c.fy = v - c.y0;
  return c;
}

}  // namespace

double SdfMap::sample(const Point& q) const {
  const BilinearCell c = locate(q, width(), height());
  const double top = (1.0 - c.fx) * dist(c.y0, c.x0) + c.fx * dist(c.y0, c.x1);
  const double bottom = (1.0 - c.fx) * dist(c.y1, c.x0) + c.fx * dist(c.y1, c.x1);
  return (1.0 - c.fy) * top + c.fy * bottom;
}

Point SdfMap::gradient(const Point& q) const {
  const BilinearCell c = locate(q, width(), height());
  Point g = Point::Zero();
  if (!c.clamped_x && c.x1 != c.x0)
    g.x() = (1.0 - c.fy) * (dist(c.y0, c.x1) - dist(c.y0, c.x0)) +
            c.fy * (dist(c.y1, c.x1) - dist(c.y1, c.x0));
  if (!c.clamped_y && c.y1 != c.y0)
    g.y() = (1.0 - c.fx) * (dist(c.y1, c.x0) - dist(c.y0, c.x0)) +
            c.fx * (dist(c.y1, c.x1) - dist(c.y0, c.x1));
  return g;
}

Point SdfMap::smoothed_gradient(const Point& q) const {
  const int w = width();
  const int h = height();
  auto central = [&](int x, int y) {
    const double gx = (dist(y, std::min(x + 1, w - 1)) - dist(y, std::max(x - 1, 0))) /
                      std::max(1, std::min(x + 1, w - 1) - std::max(x - 1, 0));
    const double gy = (dist(std::min(y + 1, h - 1), x) - dist(std::max(y - 1, 0), x)) /
                      std::max(1, std::min(y + 1, h - 1) - std::max(y - 1, 0));
    return Point(gx, gy);
  };
  const BilinearCell c = locate(q, w, h);
  return (1.0 - c.fy) * ((1.0 - c.fx) * central(c.x0, c.y0) + c.fx * central(c.x1, c.y0)) +
         c.fy * ((1.0 - c.fx) * central(c.x0, c.y1) + c.fx * central(c.x1, c.y1));
}

RasterFrame resample(const RasterFrame& frame, int width, int height) {
  if (frame.width() == width && frame.height() == height) return frame;
  const int sw = frame.width();
  const int sh = frame.height();
  const double sx = static_cast<double>(sw) / width;
  const double sy = static_cast<double>(sh) / height;
  RasterFrame out(width, height, 0.0);
  for (int y = 0; y < height; ++y) {
    const double ya = y * sy;
    const double yb = (y + 1) * sy;
    for (int x = 0; x < width; ++x) {
      const double xa = x * sx;
      const double xb = (x + 1) * sx;
      Eigen::Vector3d acc = Eigen::Vector3d::Zero();
      double area = 0.0;
      for (int j = static_cast<int>(std::floor(ya)); j < std::min(sh, static_cast<int>(std::ceil(yb))); ++j) {
        const double hy = std::min(yb, j + 1.0) - std::max(ya, static_cast<double>(j));
        if (hy <= 0.0) continue;
        for (int i = static_cast<int>(std::floor(xa)); i < std::min(sw, static_cast<int>(std::ceil(xb))); ++i) {
          const double hx = std::min(xb, i + 1.0) - std::max(xa, static_cast<double>(i));
          if (hx <= 0.0) continue;
          acc += hx * hy * frame.pixel(i, j);
          area += hx * hy;
        }
      }
      out.set_pixel(x, y, area > 0.0 ? Eigen::Vector3d(acc / area) : Eigen::Vector3d::Ones());
    }
  }
  return out;
}

}  // namespace vecfit
