#include "doctest.h"
#include "support.hpp"

#include "vecfit/error.hpp"
#include "vecfit/raster.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

using namespace vecfit;
using namespace testing;

namespace {

RenderPath square(double x0, double y0, double side, const Rgb& fill) {
  const std::vector<Point> corners = {Point(x0, y0), Point(x0 + side, y0), Point(x0 + side, y0 + side),
                                      Point(x0, y0 + side)};
  RenderPath path;
  path.fill = fill;
  path.subpath_sizes = {12};
  path.points.resize(2, 12);
  for (int j = 0; j < 4; ++j) {
    const Point& a = corners[j];
    const Point& b = corners[(j + 1) % 4];
    path.points.col(3 * j) = a;
    path.points.col(3 * j + 1) = a + (b - a) / 3.0;
    path.points.col(3 * j + 2) = a + 2.0 * (b - a) / 3.0;
  }
  return path;
}

double weighted_sum(const RasterFrame& frame, const RasterFrame& weights) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += (frame.rgb[c] * weights.rgb[c]).sum();
  return s;
}

RasterFrame random_frame(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RasterFrame f(w, h, 0.0);
  for (auto& c : f.rgb)
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = u(rng);
  return f;
}

// Brute-force nearest foreground pixel center.
Image brute_distance(const ForegroundMask& mask) {
  Image out(mask.height(), mask.width());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (int v = 0; v < mask.height(); ++v)
        for (int u = 0; u < mask.width(); ++u)
          if (mask.bits(v, u)) best = std::min(best, std::sqrt(double((x - u) * (x - u) + (y - v) * (y - v))));
      out(y, x) = best;
    }
  return out;
}

bool fd_agrees(double analytic, double fd, double rel = 5e-2, double abs = 1e-4) {
  const double err = std::abs(analytic - fd);
  return err <= abs || err <= rel * std::abs(fd);
}

}  // namespace

TEST_CASE("flatten") {
  const Point p(3, 4);
  CHECK(flatten_cubic(p, p, p, p, 0.1).size() == 1);
  const auto line = flatten_cubic(Point(0, 0), Point(1, 0), Point(2, 0), Point(3, 0), 0.1);
  CHECK(line.size() == 2);

  // Quarter circle of radius 20.
  const double k = 0.5522847498 * 20;
  const Point a(20, 0), b(20, k), c(k, 20), d(0, 20);
  const auto ts = flatten_cubic(a, b, c, d, 0.1);
  const auto eval = [&](double t) {
    const Eigen::Vector4d w = bernstein_weights(t);
    return Point(w[0] * a + w[1] * b + w[2] * c + w[3] * d);
  };
  std::vector<Point> dense;
  for (int i = 0; i <= 4000; ++i) dense.push_back(eval(i / 4000.0));
  const auto seg_dist = [](const Point& q, const Point& s0, const Point& s1) {
    const Point e = s1 - s0;
    const double t = std::clamp((q - s0).dot(e) / e.squaredNorm(), 0.0, 1.0);
    return (q - s0 - t * e).norm();
  };
  // Every vertex lies on the curve, and the polyline stays within tolerance.
  for (double t : ts) {
    double best = 1e9;
    for (const Point& q : dense) best = std::min(best, (q - eval(t)).norm());
    CHECK(best < 0.1);
  }
  double worst = 0.0;
  for (const Point& q : dense) {
    double best = 1e9;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) best = std::min(best, seg_dist(q, eval(ts[i]), eval(ts[i + 1])));
    worst = std::max(worst, best);
  }
  CHECK(worst <= 0.1);

  RenderPath path = square(2, 2, 10, Rgb::Zero());
  const FlattenedOutline outline = flatten(path, 0.1);
  REQUIRE(outline.subpaths.size() == 1);
  CHECK(outline.subpaths[0].vertices.size() == 4);
  for (const OutlineVertex& v : outline.subpaths[0].vertices) CHECK(v.weights.sum() == doctest::Approx(1.0));
}

TEST_CASE("render basics") {
  RenderOptions options;
  const RasterFrame empty = render(Scene{}, 16, 16, options);
  for (const auto& c : empty.rgb) CHECK((c == 1.0).all());

  Scene full;
  full.paths.push_back(square(0, 0, 32, Rgb::Zero()));
  const RasterFrame black = render(full, 32, 32, options);
  CHECK(black.pixel(16, 16).norm() < 1e-6);

  Scene overlap;
  // Pixels more than a band (4 tau + 2 = 4.8 px) from every edge are exact.
  overlap.paths.push_back(square(0, 0, 26, Rgb(1, 0, 0)));
  overlap.paths.push_back(square(14, 14, 20, Rgb(0, 0, 1)));
  const RasterFrame both = render(overlap, 40, 40, options);
  CHECK((both.pixel(24, 24) - Rgb(0, 0, 1)).norm() < 1e-9);
  CHECK((both.pixel(6, 6) - Rgb(1, 0, 0)).norm() < 1e-9);
  CHECK((both.pixel(36, 4) - Rgb(1, 1, 1)).norm() < 1e-9);
}

TEST_CASE("coverage is a normalized logistic") {
  const double tau = 0.7, band = 4 * tau + 2;
  CHECK(coverage(-band, tau, band) == 1.0);
  CHECK(coverage(band, tau, band) == 0.0);
  CHECK(coverage(0.0, tau, band) == doctest::Approx(0.5));
  for (double d = -4.0; d <= 4.0; d += 0.37) {
    const double h = 1e-6;
    const double fd = (coverage(d + h, tau, band) - coverage(d - h, tau, band)) / (2 * h);
    CHECK(coverage_derivative(d, tau, band) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("hole is not filled under nonzero winding") {
  const SvgDocument doc = load_fixture("hole.svg");
  const RasterFrame frame = render(make_scene(doc, 0.64), 64, 64);
  CHECK(frame.pixel(32, 32).minCoeff() > 0.99);
  // Ring pixel 3.7 px inside the outer edge and 5.9 px from the hole.
  CHECK((frame.pixel(16, 32) - doc.paths[0].fill).norm() < 0.02);
}

TEST_CASE("render_backward") {
  Scene scene;
  scene.paths.push_back(square(10.3, 12.6, 17.2, Rgb(0.2, 0.5, 0.9)));
  RenderOptions options;
  const int w = 40, h = 40;

  RasterFrame zero(w, h, 0.0);
  for (const auto& g : render_backward(scene, w, h, options, zero)) CHECK(g.isZero(0.0));

  const ScenePlan plan = plan_scene(scene, options.flatten_tolerance);
  RasterFrame red(w, h, 0.0);
  red.rgb[0].setOnes();
  const auto grad = render_backward(scene, w, h, options, red, &plan);
  const auto loss = [&](const Scene& s) { return render(s, w, h, options, nullptr, &plan).rgb[0].sum(); };
  const double step = 1e-3;
  for (int i = 0; i < scene.paths[0].points.cols(); ++i)
    for (int c = 0; c < 2; ++c) {
      Scene plus = scene, minus = scene;
      plus.paths[0].points(c, i) += step;
      minus.paths[0].points(c, i) -= step;
      const double fd = (loss(plus) - loss(minus)) / (2 * step);
      CAPTURE(i);
      CAPTURE(c);
      CAPTURE(fd);
      CHECK(fd_agrees(grad[0](c, i), fd));
    }

  // Directional derivative along a uniform +x translation, loss = mean intensity.
  RasterFrame mean(w, h, 1.0 / (3.0 * w * h));
  const auto g2 = render_backward(scene, w, h, options, mean, &plan);
  const double directional = g2[0].row(0).sum();
  Scene plus = scene, minus = scene;
  plus.paths[0].points.row(0).array() += step;
  minus.paths[0].points.row(0).array() -= step;
  const auto mean_loss = [&](const Scene& s) { return weighted_sum(render(s, w, h, options, nullptr, &plan), mean); };
  const double fd = (mean_loss(plus) - mean_loss(minus)) / (2 * step);
  CAPTURE(fd);
  CHECK_MESSAGE(fd_agrees(directional, fd), "analytic " << directional);
}

TEST_CASE("random scenes pass the gradient check") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RenderOptions options;
  const int w = 64, h = 64;
  for (int trial = 0; trial < 4; ++trial) {
    Scene scene;
    const int paths = 1 + trial % 3;
    for (int p = 0; p < paths; ++p) {
      RenderPath path;
      const int segs = 3 + static_cast<int>(u(rng) * 3);
      path.subpath_sizes = {3 * segs};
      path.points.resize(2, 3 * segs);
      const Point c(16 + 32 * u(rng), 16 + 32 * u(rng));
      const double r = 8 + 8 * u(rng);
      for (int i = 0; i < 3 * segs; ++i) {
        const double a = 2 * 3.14159265358979 * i / (3 * segs);
        path.points.col(i) = c + (r + 2 * u(rng)) * Point(std::cos(a), std::sin(a));
      }
      path.fill = Rgb(u(rng), u(rng), u(rng));
      scene.paths.push_back(path);
    }
    const RasterFrame up = random_frame(w, h, rng);
    const ScenePlan plan = plan_scene(scene, options.flatten_tolerance);
    const auto grad = render_backward(scene, w, h, options, up, &plan);
    const double step = 1e-5;
    for (std::size_t p = 0; p < scene.paths.size(); ++p)
      for (int i = 0; i < scene.paths[p].points.cols(); ++i)
        for (int c = 0; c < 2; ++c) {
          Scene plus = scene, minus = scene;
          plus.paths[p].points(c, i) += step;
          minus.paths[p].points(c, i) -= step;
          const double fd = (weighted_sum(render(plus, w, h, options, nullptr, &plan), up) -
                             weighted_sum(render(minus, w, h, options, nullptr, &plan), up)) /
                            (2 * step);
          CAPTURE(trial);
          CAPTURE(i);
          CAPTURE(fd);
          CHECK_MESSAGE(fd_agrees(grad[p](c, i), fd), "analytic " << grad[p](c, i) << " c " << c);
        }
  }
}

TEST_CASE("rendering is resolution consistent") {
  const SvgDocument doc = load_fixture("figure.svg");
  const RasterFrame small = render(make_scene(doc, 0.64), 64, 64);
  const RasterFrame large = render(make_scene(doc, 1.28), 128, 128);
  const RasterFrame down = resample(large, 64, 64);
  double mae = 0.0;
  for (int c = 0; c < 3; ++c) mae += (small.rgb[c] - down.rgb[c]).abs().sum();
  mae /= 3.0 * 64 * 64;
  CHECK(mae <= 0.02);
}

TEST_CASE("gaussian blur") {
  const auto k = gaussian_kernel();
  double sum = 0.0;
  for (double v : k) sum += v;
  CHECK(sum == doctest::Approx(1.0));
  double z = 0.0;
  for (int i = -2; i <= 2; ++i) z += std::exp(-i * i / 2.0);
  CHECK(k[2] == doctest::Approx(1.0 / z));

  RasterFrame constant(12, 9, 0.3);
  const RasterFrame blurred = gaussian_blur(constant);
  for (const auto& c : blurred.rgb) CHECK((c - 0.3).abs().maxCoeff() < 1e-15);

  RasterFrame impulse(11, 11, 0.0);
  impulse.rgb[1](5, 5) = 1.0;
  CHECK(gaussian_blur(impulse).rgb[1](5, 5) == doctest::Approx(0.1621).epsilon(1e-3));
  CHECK(gaussian_blur(impulse).rgb[1](5, 5) == doctest::Approx(1.0 / (z * z)));

  std::mt19937_64 rng(3);
  RasterFrame a = random_frame(20, 16, rng), b = random_frame(20, 16, rng);
  // Exact adjoint everywhere.
  CHECK(weighted_sum(gaussian_blur(a), b) == doctest::Approx(weighted_sum(a, gaussian_blur_adjoint(b))).epsilon(1e-12));
  // Self-adjoint and mean-preserving on interior support.
  for (RasterFrame* f : {&a, &b})
    for (auto& c : f->rgb) {
      c.topRows(2).setZero();
      c.bottomRows(2).setZero();
      c.leftCols(2).setZero();
      c.rightCols(2).setZero();
    }
  CHECK(weighted_sum(gaussian_blur(a), b) == doctest::Approx(weighted_sum(a, gaussian_blur(b))).epsilon(1e-12));
  CHECK(std::abs(gaussian_blur(a).rgb[0].sum() - a.rgb[0].sum()) < 1e-9);
}

TEST_CASE("foreground mask and target cleanup") {
  RasterFrame white(10, 10, 1.0);
  CHECK(foreground_mask(white).count() == 0);
  RasterFrame faint(10, 10, 0.985);
  CHECK(foreground_mask(faint).count() == 0);

  RasterFrame sq(10, 10, 1.0);
  for (int y = 2; y < 5; ++y)
    for (int x = 3; x < 7; ++x) sq.set_pixel(x, y, Rgb::Zero());
  const ForegroundMask m = foreground_mask(sq);
  CHECK(m.count() == 12);
  CHECK(m.bits(2, 3));
  CHECK_FALSE(m.bits(5, 3));

  std::mt19937_64 rng(5);
  RasterFrame noise = random_frame(10, 10, rng);
  CHECK(clean_target(noise, ForegroundMask(10, 10, true)).rgb[2].isApprox(noise.rgb[2]));
  const RasterFrame wiped = clean_target(noise, ForegroundMask(10, 10, false));
  for (const auto& c : wiped.rgb) CHECK((c == 1.0).all());
  ForegroundMask one(10, 10, false);
  one.bits(4, 4) = true;
  const RasterFrame kept = clean_target(noise, one);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) {
      const bool inside = std::abs(x - 4) <= 1 && std::abs(y - 4) <= 1;
      CHECK((kept.pixel(x, y) == (inside ? noise.pixel(x, y) : Rgb(1, 1, 1))));
    }
  CHECK_THROWS_AS(clean_target(noise, ForegroundMask(9, 10, false)), DimensionMismatch);
}

TEST_CASE("distance transform matches brute force") {
  ForegroundMask all(8, 8, true);
  CHECK((distance_transform(all).dist == 0.0).all());

  ForegroundMask one(20, 12, false);
  one.bits(6, 3) = true;
  CHECK(distance_transform(one).dist(6, 8) == doctest::Approx(4.0));

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 12; ++trial) {
    const int w = 8 + static_cast<int>(rng() % 57), h = 8 + static_cast<int>(rng() % 57);
    ForegroundMask mask(w, h, false);
    const int dots = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < dots; ++i) mask.bits(rng() % h, rng() % w) = true;
    const Image brute = brute_distance(mask);
    const SdfMap sdf = distance_transform(mask);
    const Image expected = (brute - 1.0).max(0.0);
    CHECK((sdf.dist - expected).abs().maxCoeff() == 0.0);
    CHECK((euclidean_distance(mask) - brute).abs().maxCoeff() == 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (brute(y, x) <= 1.0) CHECK(sdf.dist(y, x) == 0.0);
  }
}

TEST_CASE("sdf sampling") {
  ForegroundMask one(16, 16, false);
  one.bits(8, 4) = true;
  const SdfMap sdf = distance_transform(one);
  CHECK(sdf.sample(Point(4.5 + 5, 8.5)) == doctest::Approx(4.0));
  CHECK(sdf.sample(Point(4.5, 8.5)) == 0.0);
  const Point q(9.3, 6.1);
  const double h = 1e-6;
  const Point g = sdf.gradient(q);
  CHECK(g.x() == doctest::Approx((sdf.sample(q + Point(h, 0)) - sdf.sample(q - Point(h, 0))) / (2 * h)));
  CHECK(g.y() == doctest::Approx((sdf.sample(q + Point(0, h)) - sdf.sample(q - Point(0, h))) / (2 * h)));
  CHECK(sdf.sample(Point(-50, 8.5)) == sdf.sample(Point(0.5, 8.5)));
  CHECK(sdf.smoothed_gradient(Point(12.5, 8.5)).x() > 0.0);

  // 1-Lipschitz on pixel centers.
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x + 1 < 16; ++x) CHECK(std::abs(sdf.dist(y, x + 1) - sdf.dist(y, x)) <= 1.0 + 1e-6);
}

TEST_CASE("png round trip") {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "vecfit_raster_test";
  std::filesystem::remove_all(dir);
  std::mt19937_64 rng(9);
  RasterFrame f(13, 7, 0.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& c : f.rgb)
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = u(rng);
  const auto files = write_frame_sequence(dir.string(), {f, f});
  CHECK(files.size() == 2);
  const auto back = read_frame_sequence(dir.string());
  REQUIRE(back.size() == 2);
  for (int c = 0; c < 3; ++c) CHECK((back[1].rgb[c] - f.rgb[c]).abs().maxCoeff() <= 0.5 / 255 + 1e-12);
  ForegroundMask m(5, 4, false);
  m.bits(1, 2) = true;
  write_mask_png((dir / "m.png").string(), m);
  CHECK((read_mask_png((dir / "m.png").string()).bits == m.bits).all());
  CHECK_THROWS_AS(read_png((dir / "missing.png").string()), IoError);
  std::filesystem::remove_all(dir);
}
