#include "doctest.h"
#include "support.hpp"

#include "vecfit/error.hpp"
#include "vecfit/motion.hpp"

#include <cmath>
#include <random>

using namespace vecfit;
using namespace testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

HomographyParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  HomographyParams h;
  h << 5 * u(rng), 5 * u(rng), 0.5 * u(rng), 0.2 * u(rng), 0.2 * u(rng), 0.2 * u(rng), 1e-3 * u(rng),
      1e-3 * u(rng);
  return h;
}

// Loss L = sum(upstream .* deform(params)) as a function of the packed vector.
double linear_loss(const CanonicalGeometry& geom, MotionParams params, const Eigen::VectorXd& flat, int k,
                   const Eigen::Matrix2Xd& upstream) {
  params.unpack(flat);
  return upstream.cwiseProduct(deform_keyframe(geom, params, k)).sum();
}

}  // namespace

TEST_CASE("compose_homography") {
  const Point c(13, -4);
  CHECK(compose_homography<double>(HomographyParams::Zero(), c).isIdentity(0.0));

  HomographyParams h = HomographyParams::Zero();
  h[kTx] = 5;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 2) = 5;
  CHECK(compose_homography<double>(h, c).isApprox(t, 1e-15));

  h.setZero();
  h[kTheta] = kPi / 2;
  const Eigen::Vector3d x = compose_homography<double>(h, Point(10, 10)) * Eigen::Vector3d(11, 10, 1);
  CHECK((x.head<2>() / x.z() - Point(10, 11)).norm() < 1e-12);
}

TEST_CASE("homography jacobian matches finite differences") {
  std::mt19937_64 rng(1);
  const HomographyParams h = random_params(rng);
  const Point c(20, 30);
  const HomographyJacobian j = homography_jacobian(h, c);
  for (int q = 0; q < 8; ++q) {
    const double step = q >= kP1 ? 1e-8 : 1e-6;
    HomographyParams a = h, b = h;
    a[q] += step;
    b[q] -= step;
    const Eigen::Matrix3d fd = (compose_homography<double>(a, c) - compose_homography<double>(b, c)) / (2 * step);
    CHECK((j.params[q] - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("apply_motion") {
  Eigen::Matrix2Xd rest(2, 3);
  rest << 1, 2, 3, 4, 5, 6;
  const Eigen::Matrix2Xd zero = Eigen::Matrix2Xd::Zero(2, 3);
  CHECK(apply_motion(rest, zero, Eigen::Matrix3d::Identity()) == rest);

  Eigen::Matrix2Xd delta = zero;
  delta.col(1) = Point(2, 3);
  const Eigen::Matrix2Xd moved = apply_motion(rest, delta, Eigen::Matrix3d::Identity());
  CHECK(moved.col(1) == rest.col(1) + Point(2, 3));
  CHECK(moved.col(0) == rest.col(0));

  HomographyParams h = HomographyParams::Zero();
  h[kTx] = 7.25;
  h[kTy] = -3.5;
  const Eigen::Matrix2Xd translated = apply_motion(rest, zero, compose_homography<double>(h, Point(0, 0)));
  CHECK(translated == (rest.colwise() + Point(7.25, -3.5)));

  // Perspective: independent homogeneous evaluation.
  h.setZero();
  h[kP1] = 0.001;
  Eigen::Matrix2Xd far(2, 1);
  far << 400, 250;
  const Eigen::Matrix3d H = compose_homography<double>(h, Point(50, 50));
  const double w = 0.001 * 400 + 1.0;
  CHECK((apply_motion(far, Eigen::Matrix2Xd::Zero(2, 1), H).col(0) - Point(400 / w, 250 / w)).norm() < 1e-12);

  h[kP1] = -0.01;
  CHECK_THROWS_AS(apply_motion(far, Eigen::Matrix2Xd::Zero(2, 1), compose_homography<double>(h, Point(0, 0))),
                  DegenerateProjection);
  const Eigen::Matrix2Xd clamped = apply_motion(far, Eigen::Matrix2Xd::Zero(2, 1),
                                                compose_homography<double>(h, Point(0, 0)), ProjectionGuard::Clamp);
  CHECK(clamped.allFinite());
  CHECK_THROWS_AS(apply_motion(rest, Eigen::Matrix2Xd::Zero(2, 2), Eigen::Matrix3d::Identity()), DimensionMismatch);
}

TEST_CASE("init_params") {
  const SvgDocument doc = load_fixture("figure.svg");
  const CanonicalGeometry geom = make_geometry_for_resolution(doc, 128);
  CHECK(geom.width == 128);
  CHECK(geom.pixels_per_unit == doctest::Approx(1.28));
  const MotionParams params = init_params(geom, 15);
  CHECK(params.keyframes() == 15);
  CHECK(params.groups() == 3);
  CHECK(params.points() == geom.point_count());
  for (int k = 0; k < 15; ++k) {
    CHECK(params.homographies[k].isZero(0.0));
    CHECK(params.offsets[k].isZero(0.0));
  }
  CHECK(params.global_center == Point(64, 64));
  // Leg: x in [41, 53], y in [66, 94].
  CHECK((params.centers.col(0) - 1.28 * Point(47, 80)).norm() < 1e-9);
  CHECK(deform_keyframe(geom, params, 0) == geom.rest);
  CHECK_THROWS_AS(init_params(geom, 0), ConfigError);
  CHECK_THROWS_AS(deform_keyframe(geom, params, 15), DimensionMismatch);
}

TEST_CASE("motion_backward") {
  const SvgDocument doc = load_fixture("figure.svg");
  const CanonicalGeometry geom = make_geometry_for_resolution(doc, 64);
  MotionParams params = init_params(geom, 2);

  const Eigen::Matrix2Xd zero = Eigen::Matrix2Xd::Zero(2, geom.point_count());
  const KeyframeGradient none = motion_backward(geom, params, 1, zero);
  CHECK(none.homographies.isZero(0.0));
  CHECK(none.centers.isZero(0.0));
  CHECK(none.offsets.isZero(0.0));

  Eigen::Matrix2Xd one = zero;
  one.col(5) = Point(0.3, -1.7);
  const KeyframeGradient id = motion_backward(geom, params, 1, one);
  CHECK(id.offsets.col(5) == Point(0.3, -1.7));

  std::mt19937_64 rng(42);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    for (int g = 0; g < params.groups(); ++g) params.homographies[1].col(g) = random_params(rng);
    for (int i = 0; i < geom.point_count(); ++i) params.offsets[1].col(i) = Point(n(rng), n(rng));
    params.centers += Eigen::Matrix2Xd::Random(2, params.groups());
    Eigen::Matrix2Xd up(2, geom.point_count());
    for (int i = 0; i < geom.point_count(); ++i) up.col(i) = Point(n(rng), n(rng));

    const KeyframeGradient grad = motion_backward(geom, params, 1, up);
    MotionParams analytic = params.zeros_like();
    analytic.homographies[1] = grad.homographies;
    analytic.centers = grad.centers;
    analytic.offsets[1] = grad.offsets;
    const Eigen::VectorXd a = analytic.pack();
    const Eigen::VectorXd x = params.pack();
    const double h = 1e-5;
    int checked = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::VectorXd plus = x, minus = x;
      // Perspective entries live on a 1/pixel scale.
      const bool perspective = [&] {
        MotionParams probe = params.zeros_like();
        Eigen::VectorXd e = Eigen::VectorXd::Zero(x.size());
        e[i] = 1.0;
        probe.unpack(e);
        for (const auto& hk : probe.homographies)
          if (hk.row(kP1).any() || hk.row(kP2).any()) return true;
        return false;
      }();
      const double step = perspective ? h * 1e-3 : h;
      plus[i] += step;
      minus[i] -= step;
      const double fd = (linear_loss(geom, params, plus, 1, up) - linear_loss(geom, params, minus, 1, up)) / (2 * step);
      CAPTURE(i);
      CHECK(std::abs(a[i] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
      ++checked;
    }
    CHECK(checked == 2 * params.groups() + 8 * 2 * params.groups() + 2 * 2 * geom.point_count());
  }
}

TEST_CASE("checkpoint json round trip and rescaling") {
  const SvgDocument doc = load_fixture("ball_bar.svg");
  const CanonicalGeometry geom = make_geometry_for_resolution(doc, 128);
  MotionParams params = init_params(geom, 3);
  params.homographies[2](kTx, 0) = 12.5;
  params.homographies[2](kP1, 1) = 1e-4;
  params.offsets[1](1, 3) = -2.0;
  const std::string text = motion_to_json(params, geom);
  const MotionParams back = motion_from_json(text, geom);
  CHECK(back.pack() == params.pack());

  const CanonicalGeometry big = make_geometry_for_resolution(doc, 256);
  const MotionParams scaled = motion_from_json(text, big);
  CHECK(scaled.homographies[2](kTx, 0) == doctest::Approx(25.0));
  CHECK(scaled.homographies[2](kP1, 1) == doctest::Approx(5e-5));
  CHECK(scaled.offsets[1](1, 3) == doctest::Approx(-4.0));
  // Same user-space motion at either resolution.
  const Eigen::Matrix2Xd a = deform_keyframe(geom, params, 2) / geom.pixels_per_unit;
  const Eigen::Matrix2Xd b = deform_keyframe(big, scaled, 2) / big.pixels_per_unit;
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);

  const CanonicalGeometry other = make_geometry_for_resolution(load_fixture("figure.svg"), 128);
  CHECK_THROWS_AS(motion_from_json(text, other), DimensionMismatch);
  CHECK_THROWS_AS(motion_from_json("{\"centers\": 3}", geom), ConfigError);
  CHECK_THROWS_AS(motion_from_json("not json", geom), ConfigError);
}
