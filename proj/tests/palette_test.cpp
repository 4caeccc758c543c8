#include "doctest.h"
#include "support.hpp"

#include "vecfit/error.hpp"
#include "vecfit/palette.hpp"

#include <cmath>
#include <set>

using namespace vecfit;
using namespace testing;

namespace {

// Direct HSV to RGB for full saturation, hue in [0, 1).
Rgb hsv(double h, double v) {
  const double x = h * 6.0;
  const int sector = static_cast<int>(std::floor(x)) % 6;
  const double f = x - std::floor(x);
  const double p = 0.0, q = v * (1 - f), t = v * f;
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

std::string doc_with_rects(const std::vector<double>& sizes) {
  std::string text = R"(<svg viewBox="0 0 200 200">)";
  for (std::size_t i = 0; i < sizes.size(); ++i)
    text += "<rect x=\"" + std::to_string(i * 10) + "\" width=\"" + std::to_string(sizes[i]) + "\" height=\"" +
            std::to_string(sizes[i]) + "\" fill=\"#334455\"/>";
  return text + "</svg>";
}

}  // namespace

TEST_CASE("packing table endpoints") {
  const auto one = packing_centers(1);
  REQUIRE(one);
  CHECK(one->radius == doctest::Approx(0.5));
  CHECK((one->centers.at(0) - Eigen::Vector3d::Constant(0.5)).norm() < 1e-9);

  // sqrt(3) (1 - 2r) = 2r along the main diagonal.
  const double r2 = std::sqrt(3.0) / (2.0 + 2.0 * std::sqrt(3.0));
  const auto two = packing_centers(2);
  REQUIRE(two);
  CHECK(two->radius == doctest::Approx(r2).epsilon(1e-6));
  CHECK(r2 == doctest::Approx(0.3170).epsilon(1e-3));
  CHECK((two->centers[0] - two->centers[1]).norm() >= 2 * r2 - 1e-6);

  CHECK_FALSE(packing_centers(kMaxTabulatedPacking + 1).has_value());
  CHECK(kMaxTabulatedPacking >= 64);
}

TEST_CASE("every tabulated packing satisfies its own radius") {
  for (int k = 1; k <= kMaxTabulatedPacking; ++k) {
    CAPTURE(k);
    const auto p = packing_centers(k);
    REQUIRE(p);
    REQUIRE(static_cast<int>(p->centers.size()) == k);
    CHECK(p->radius > 0.0);
    CHECK(p->radius <= 0.5);
    double worst = 1e9;
    for (int i = 0; i < k; ++i) {
      CHECK((p->centers[i].array() >= p->radius - 1e-9).all());
      CHECK((p->centers[i].array() <= 1.0 - p->radius + 1e-9).all());
      for (int j = i + 1; j < k; ++j) worst = std::min(worst, (p->centers[i] - p->centers[j]).norm());
    }
    if (k > 1) CHECK(worst >= 2 * p->radius - 1e-9);
  }
}

TEST_CASE("hsv fallback") {
  CHECK(hsv_fallback(1).at(0) == Rgb(1, 0, 0));
  const std::vector<Rgb> three = hsv_fallback(3);
  CHECK((three[0] - hsv(0.0, 1.0)).norm() < 1e-12);
  CHECK((three[1] - hsv(1.0 / 3.0, 0.6)).norm() < 1e-12);
  CHECK((three[2] - hsv(2.0 / 3.0, 1.0)).norm() < 1e-12);
  CHECK((three[1] - Rgb(0, 0.6, 0)).norm() < 1e-12);

  const std::vector<Rgb> many = hsv_fallback(360);
  double worst = 1e9;
  for (std::size_t i = 0; i < many.size(); ++i)
    for (std::size_t j = i + 1; j < many.size(); ++j) worst = std::min(worst, (many[i] - many[j]).norm());
  CHECK(worst > 0.0);
}

TEST_CASE("deterministic shuffle is a seeded permutation") {
  const std::vector<int> a = deterministic_shuffle(50, 0);
  CHECK(a == deterministic_shuffle(50, 0));
  CHECK(a != deterministic_shuffle(50, 1));
  std::set<int> seen(a.begin(), a.end());
  CHECK(seen.size() == 50);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 49);
}

TEST_CASE("filled area from the flattened outline") {
  const SvgDocument doc = parse_svg(R"(<svg viewBox="0 0 100 100"><rect x="10" y="10" width="20" height="30"/>
    <circle cx="50" cy="50" r="10"/></svg>)");
  CHECK(filled_area(doc.paths[0]) == doctest::Approx(600.0));
  // Chords sit at most the 0.1 flattening tolerance inside the circle; the
  // cubic arcs bulge out by at most 2.8e-4 r.
  const double pi = 3.14159265358979;
  CHECK(filled_area(doc.paths[1]) >= pi * 100 - 2 * pi * 10 * 0.1);
  CHECK(filled_area(doc.paths[1]) <= pi * std::pow(10 * (1 + 2.8e-4), 2));
  const SvgDocument hole = load_fixture("hole.svg");
  const SvgDocument solid = parse_svg(R"(<svg viewBox="0 0 100 100"><rect x="20" y="20" width="60" height="60"/></svg>)");
  CHECK(filled_area(hole.paths[0]) < filled_area(solid.paths[0]));
}

TEST_CASE("assign_palette") {
  SUBCASE("single path takes the cube center") {
    const SvgDocument doc = load_fixture("triangle.svg");
    const RecolorMap map = assign_palette(doc);
    REQUIRE(map.assignments.size() == 1);
    CHECK((map.assignments.at(0).assigned - Rgb::Constant(0.5)).norm() < 1e-9);
    CHECK(map.assignments.at(0).original == doc.paths[0].fill);
  }
  SUBCASE("larger paths take earlier shuffled centers, ties by document order") {
    const SvgDocument doc = parse_svg(doc_with_rects({2, 8, 8, 4}));
    const RecolorMap map = assign_palette(doc);
    const auto packing = packing_centers(4);
    const std::vector<int> perm = deterministic_shuffle(4, 0);
    const std::vector<int> by_area = {1, 2, 3, 0};
    for (int rank = 0; rank < 4; ++rank)
      CHECK((map.assignments.at(by_area[rank]).assigned - packing->centers[perm[rank]]).norm() < 1e-12);
    CHECK(map.separation == doctest::Approx(2 * packing->radius));
  }
  SUBCASE("deterministic and reversible") {
    const SvgDocument doc = parse_svg(doc_with_rects({3, 5, 7, 9, 11}));
    const RecolorMap a = assign_palette(doc);
    const RecolorMap b = assign_palette(doc);
    for (const auto& [p, e] : a.assignments) CHECK(e.assigned == b.assignments.at(p).assigned);
    const SvgDocument recolored = apply_recolor(doc, a);
    for (const PathGeometry& path : recolored.paths) CHECK(path.original_fill == Rgb(0x33, 0x44, 0x55) / 255.0);
    const SvgDocument restored = restore_colors(recolored, a);
    for (std::size_t p = 0; p < doc.paths.size(); ++p) CHECK(restored.paths[p].fill == doc.paths[p].fill);
  }
  SUBCASE("excluded fills keep their color") {
    const SvgDocument doc = load_fixture("figure.svg");
    PaletteOptions options;
    options.exclude_fills = {parse_color("#c03030")};
    const RecolorMap map = assign_palette(doc, options);
    CHECK(map.assignments.size() == 3);
    CHECK(map.assignments.count(3) == 0);
  }
}

TEST_CASE("restore_colors edge cases") {
  const SvgDocument doc = load_fixture("figure.svg");
  const SvgDocument same = restore_colors(doc, RecolorMap{});
  for (std::size_t p = 0; p < doc.paths.size(); ++p) CHECK(same.paths[p].fill == doc.paths[p].fill);

  RecolorMap map = assign_palette(doc);
  const SvgDocument recolored = apply_recolor(doc, map);
  map.assignments.erase(2);
  CHECK_THROWS_AS(restore_colors(recolored, map), MissingAssignment);
}

TEST_CASE("recolor map json round trip") {
  const SvgDocument doc = load_fixture("figure.svg");
  const RecolorMap map = assign_palette(doc);
  const RecolorMap back = recolor_map_from_json(recolor_map_to_json(map));
  REQUIRE(back.assignments.size() == map.assignments.size());
  for (const auto& [p, e] : map.assignments) {
    CHECK(color_to_hex(back.assignments.at(p).assigned) == color_to_hex(e.assigned));
    CHECK(color_to_hex(back.assignments.at(p).original) == color_to_hex(e.original));
  }
  CHECK_THROWS_AS(recolor_map_from_json("[1,2]"), ConfigError);
}
