#include "doctest.h"
#include "support.hpp"

#include "vecfit/error.hpp"
#include "vecfit/raster.hpp"
#include "vecfit/svg.hpp"

#include <cmath>
#include <random>

using namespace vecfit;
using namespace testing;

namespace {

Point cubic_at(const Point& a, const Point& b, const Point& c, const Point& d, double t) {
  const Eigen::Vector4d w = bernstein_weights(t);
  return w[0] * a + w[1] * b + w[2] * c + w[3] * d;
}

// Independent rect outline: anchors clockwise from the top-left corner.
std::vector<Point> rect_anchors(double x, double y, double w, double h) {
  return {Point(x, y), Point(x + w, y), Point(x + w, y + h), Point(x, y + h)};
}

void check_same_geometry(const SvgDocument& a, const SvgDocument& b, double tol) {
  REQUIRE(a.paths.size() == b.paths.size());
  CHECK(a.painter_order == b.painter_order);
  for (std::size_t p = 0; p < a.paths.size(); ++p) {
    CHECK(a.paths[p].fill == b.paths[p].fill);
    REQUIRE(a.paths[p].subpaths.size() == b.paths[p].subpaths.size());
    for (std::size_t s = 0; s < a.paths[p].subpaths.size(); ++s) {
      const auto& pa = a.paths[p].subpaths[s].points;
      const auto& pb = b.paths[p].subpaths[s].points;
      REQUIRE(pa.size() == pb.size());
      for (std::size_t i = 0; i < pa.size(); ++i) CHECK((pa[i] - pb[i]).cwiseAbs().maxCoeff() <= tol);
    }
  }
}

}  // namespace

TEST_CASE("line path is promoted to cubics and closed") {
  const SvgDocument doc = parse_svg(R"(<svg viewBox="0 0 10 10"><path d="M0 0 L10 0 L10 10 Z" fill="#f00"/></svg>)");
  REQUIRE(doc.groups.size() == 1);
  REQUIRE(doc.paths.size() == 1);
  REQUIRE(doc.paths[0].subpaths.size() == 1);
  const Subpath& s = doc.paths[0].subpaths[0];
  CHECK(s.segment_count() == 3);
  CHECK(doc.paths[0].fill == Rgb(1, 0, 0));
  CHECK(doc.paths[0].original_fill == Rgb(1, 0, 0));
  const std::vector<Point> anchors = {Point(0, 0), Point(10, 0), Point(10, 10)};
  for (std::size_t j = 0; j < 3; ++j) {
    const Point& a = anchors[j];
    const Point& b = anchors[(j + 1) % 3];
    CHECK(s.points[3 * j] == a);
    CHECK(s.points[3 * j + 1] == a + (b - a) / 3.0);
    CHECK(s.points[3 * j + 2] == a + 2.0 * (b - a) / 3.0);
  }
}

TEST_CASE("rect anchors match an independent conversion") {
  const SvgDocument doc =
      parse_svg(R"(<svg viewBox="0 0 10 10"><rect x="1" y="1" width="2" height="3" fill="#000"/></svg>)");
  REQUIRE(doc.paths.size() == 1);
  const Subpath& s = doc.paths[0].subpaths.at(0);
  REQUIRE(s.segment_count() == 4);
  const std::vector<Point> expected = rect_anchors(1, 1, 2, 3);
  for (std::size_t j = 0; j < 4; ++j) CHECK((s.points[3 * j] - expected[j]).norm() < 1e-12);
}

TEST_CASE("unsupported content is rejected with the element name") {
  const char* gradient = R"(<svg viewBox="0 0 10 10"><defs><linearGradient id="g"/></defs>
    <rect width="5" height="5" fill="#000"/></svg>)";
  CHECK_THROWS_AS(parse_svg(gradient), UnsupportedFeature);
  try {
    parse_svg(gradient);
  } catch (const UnsupportedFeature& e) {
    CHECK(std::string(e.what()).find("linearGradient") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_svg(R"(<svg viewBox="0 0 10 10"><g><g><rect width="1" height="1"/></g></g></svg>)"),
                  UnsupportedFeature);
  CHECK_THROWS_AS(parse_svg(R"(<svg viewBox="0 0 10 10"><text>hi</text></svg>)"), UnsupportedFeature);
  CHECK_THROWS_AS(parse_svg(R"(<svg viewBox="0 0 10 10"><rect width="1" height="1" stroke="#000"/></svg>)"),
                  UnsupportedFeature);
  CHECK_NOTHROW(parse_svg(R"(<svg viewBox="0 0 10 10"><rect width="1" height="1" stroke="none"/></svg>)"));
  CHECK_THROWS_AS(parse_svg(R"(<svg viewBox="0 0 10 10"><path d="M0 0 L1 0 L1 1 Z" fill-rule="evenodd"/></svg>)"),
                  UnsupportedFeature);
}

TEST_CASE("lenient parsing ignores strokes with a warning") {
  ParseOptions options;
  options.strict = false;
  std::vector<std::string> warnings;
  const SvgDocument doc =
      parse_svg(R"(<svg viewBox="0 0 10 10"><rect width="1" height="1" stroke="#000"/></svg>)", options, &warnings);
  CHECK(doc.paths.size() == 1);
  CHECK(warnings.size() == 1);
}

TEST_CASE("malformed path data") {
  CHECK_THROWS_AS(parse_svg(R"(<svg viewBox="0 0 10 10"><path d="M0 0 L1" fill="#000"/></svg>)"), MalformedPath);
  CHECK_THROWS_AS(parse_svg(R"(<svg viewBox="0 0 10 10"><path d="Q 1 2" fill="#000"/></svg>)"), MalformedPath);
  CHECK_THROWS_AS(parse_svg(R"(<svg viewBox="0 0 10 10"><path d="M0 0 X 3 4" fill="#000"/></svg>)"), MalformedPath);
}

TEST_CASE("quadratic segments are degree-elevated exactly") {
  const SvgDocument doc = parse_svg(R"(<svg viewBox="0 0 10 10"><path d="M0 0 Q5 10 10 0 Z" fill="#000"/></svg>)");
  const Subpath& s = doc.paths[0].subpaths.at(0);
  const Point p0(0, 0), p1(5, 10), p2(10, 0);
  for (double t = 0.0; t <= 1.0; t += 0.125) {
    const Point quad = (1 - t) * (1 - t) * p0 + 2 * t * (1 - t) * p1 + t * t * p2;
    CHECK((cubic_at(s.points[0], s.points[1], s.points[2], s.points[3], t) - quad).norm() < 1e-12);
  }
}

TEST_CASE("arc approximation stays within tolerance of the circle") {
  std::vector<Point> out;
  const Point from(10, 0), to(-10, 0);
  arc_to_cubics(from, 10, 10, 0, false, true, to, out, 0.01);
  REQUIRE(out.size() % 3 == 0);
  Point start = from;
  double worst = 0.0;
  for (std::size_t i = 0; i < out.size(); i += 3) {
    for (int n = 0; n <= 200; ++n) {
      const Point q = cubic_at(start, out[i], out[i + 1], out[i + 2], n / 200.0);
      worst = std::max(worst, std::abs(q.norm() - 10.0));
    }
    start = out[i + 2];
  }
  CHECK(worst <= 0.01);
  CHECK((start - to).norm() < 1e-9);
}

TEST_CASE("transforms and viewBox are baked into coordinates") {
  const SvgDocument doc = parse_svg(
      R"svg(<svg width="20" height="20" viewBox="0 0 10 10"><g transform="translate(1 2)">)svg"
      R"svg(<rect x="0" y="0" width="2" height="2" transform="scale(2)" fill="#000"/></g></svg>)svg");
  CHECK(doc.canvas_width == 20);
  const Subpath& s = doc.paths[0].subpaths.at(0);
  // viewBox scale 2, then translate(1,2), then scale(2).
  CHECK((s.points[0] - Point(2, 4)).norm() < 1e-12);
  CHECK((s.points[6] - Point(10, 12)).norm() < 1e-12);
}

TEST_CASE("paths outside groups become singleton groups") {
  const SvgDocument doc = load_fixture("figure.svg");
  CHECK(doc.groups.size() == 3);
  CHECK(doc.groups[1].path_indices == std::vector<int>{1, 2});
  const SvgDocument loose = parse_svg(
      R"(<svg viewBox="0 0 10 10"><rect id="a" width="1" height="1"/><rect id="b" x="2" width="1" height="1"/></svg>)");
  CHECK(loose.groups.size() == 2);
  CHECK(loose.groups[0].centroid.isApprox(Point(0.5, 0.5)));
}

TEST_CASE("serialize then parse is a geometric fixed point") {
  for (const char* name : {"triangle.svg", "ball.svg", "ball_bar.svg", "figure.svg", "concave.svg", "hole.svg"}) {
    CAPTURE(name);
    const SvgDocument doc = load_fixture(name);
    const SvgDocument again = parse_svg(serialize_static(doc));
    check_same_geometry(doc, again, 1e-9);
    CHECK(again.groups.size() == doc.groups.size());
    for (std::size_t g = 0; g < doc.groups.size(); ++g) CHECK(again.groups[g].id == doc.groups[g].id);
  }
}

TEST_CASE("empty document serializes to a bare svg element") {
  const SvgDocument doc = parse_svg(R"(<svg viewBox="0 0 10 10"></svg>)");
  CHECK(doc.paths.empty());
  const SvgDocument again = parse_svg(serialize_static(doc));
  CHECK(again.paths.empty());
  CHECK(again.canvas_width == 10);
}

TEST_CASE("painter order survives serialization of a 100-path document") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 90.0);
  std::string text = R"(<svg viewBox="0 0 100 100">)";
  for (int i = 0; i < 100; ++i)
    text += "<rect id=\"r" + std::to_string(i) + "\" x=\"" + std::to_string(u(rng)) + "\" y=\"" +
            std::to_string(u(rng)) + "\" width=\"5\" height=\"5\" fill=\"#102030\"/>";
  text += "</svg>";
  const SvgDocument doc = parse_svg(text);
  const SvgDocument again = parse_svg(serialize_static(doc));
  REQUIRE(again.paths.size() == 100);
  for (int i = 0; i < 100; ++i) CHECK(again.paths[again.painter_order[i]].id == doc.paths[doc.painter_order[i]].id);
  check_same_geometry(doc, again, 1e-9);
}

TEST_CASE("flatten_params ordering and inverse") {
  const SvgDocument tri = load_fixture("triangle.svg");
  const FlatParams flat = flatten_params(tri);
  CHECK(flat.points.cols() == 9);
  CHECK(flat.index.size() == 9);
  for (std::size_t i = 0; i < flat.index.size(); ++i) {
    CHECK(flat.index[i].flat_index == static_cast<int>(i));
    CHECK((flat.index[i].role == ControlRole::Anchor) == (i % 3 == 0));
  }
  const SvgDocument back = unflatten_params(tri, flat.points);
  check_same_geometry(tri, back, 0.0);

  const SvgDocument two = load_fixture("ball_bar.svg");
  const FlatParams f2 = flatten_params(two);
  int last0 = -1, first1 = 1 << 30;
  for (const ControlPointIndex& c : f2.index) {
    if (c.path == 0) last0 = std::max(last0, c.flat_index);
    if (c.path == 1) first1 = std::min(first1, c.flat_index);
  }
  CHECK(last0 < first1);
  CHECK(path_offsets(two).back() == f2.points.cols());
  CHECK_THROWS_AS(unflatten_params(two, Eigen::Matrix2Xd(2, 3)), DimensionMismatch);
}

TEST_CASE("colors") {
  CHECK(parse_color("#f00") == Rgb(1, 0, 0));
  CHECK(parse_color("rgb(0, 255, 0)") == Rgb(0, 1, 0));
  CHECK(parse_color("blue") == Rgb(0, 0, 1));
  CHECK(color_to_hex(Rgb(1, 0.5, 0)) == "#ff8000");
}
