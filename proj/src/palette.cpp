#include "vecfit/palette.hpp"

#include "vecfit/error.hpp"
#include "vecfit/raster.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace vecfit {

namespace {

struct PackingEntry {
  int k;
  double radius;
  std::vector<std::array<double, 3>> centers;
};

// Best spreads of K equal spheres in the unit cube, generated offline by
// tools/gen_packings.py.
const std::vector<PackingEntry>& packing_table() {
  static const std::vector<PackingEntry> table = {
#include "packing_table.inc"
  };
  return table;
}

Rgb hsv_to_rgb(double h, double s, double v) {
  const double h6 = h * 6.0;
  const int sector = static_cast<int>(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

double min_pairwise_distance(const std::vector<Rgb>& colors) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < colors.size(); ++i)
    for (std::size_t j = i + 1; j < colors.size(); ++j) best = std::min(best, (colors[i] - colors[j]).norm());
  return best;
}

}  // namespace

std::optional<Packing> packing_centers(int k) {
  if (k < 1 || k > kMaxTabulatedPacking) return std::nullopt;
  const PackingEntry& e = packing_table().at(static_cast<std::size_t>(k - 1));
  Packing p;
  p.radius = e.radius;
  p.centers.reserve(e.centers.size());
  for (const auto& c : e.centers) p.centers.emplace_back(c[0], c[1], c[2]);
  return p;
}

std::vector<Rgb> hsv_fallback(int k) {
  std::vector<Rgb> colors;
  colors.reserve(static_cast<std::size_t>(std::max(k, 0)));
  for (int i = 0; i < k; ++i)
    colors.push_back(hsv_to_rgb(static_cast<double>(i) / k, 1.0, i % 2 == 0 ? 1.0 : 0.6));
  return colors;
}

std::vector<int> deterministic_shuffle(int n, std::uint64_t seed) {
  std::vector<int> perm(static_cast<std::size_t>(std::max(n, 0)));
  std::iota(perm.begin(), perm.end(), 0);
  std::uint64_t state = seed;
  for (int i = n - 1; i > 0; --i) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    const int j = static_cast<int>((state >> 33) % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

double filled_area(const PathGeometry& path) {
  const FlattenedOutline outline = flatten(path, 0.1);
  double area = 0.0;
  for (const FlattenedSubpath& sub : outline.subpaths) {
    const auto& v = sub.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point& a = v[i].position;
      const Point& b = v[(i + 1) % v.size()].position;
      area += a.x() * b.y() - b.x() * a.y();
    }
  }
  return std::abs(area) / 2.0;
}

RecolorMap assign_palette(const SvgDocument& doc, const PaletteOptions& options) {
  std::vector<int> recolorable;
  for (std::size_t i = 0; i < doc.paths.size(); ++i) {
    const bool excluded = std::any_of(options.exclude_fills.begin(), options.exclude_fills.end(),
                                      [&](const Rgb& c) { return (c - doc.paths[i].fill).norm() < 1e-9; });
    if (!excluded) recolorable.push_back(static_cast<int>(i));
  }
  RecolorMap map;
  const int count = static_cast<int>(recolorable.size());
  if (count == 0) return map;

  std::vector<double> area(doc.paths.size(), 0.0);
  for (int i : recolorable) area[i] = filled_area(doc.paths[i]);
  std::stable_sort(recolorable.begin(), recolorable.end(),
                   [&](int a, int b) { return area[a] > area[b]; });

  std::vector<Rgb> colors;
  if (const auto packing = packing_centers(count)) {
    colors = packing->centers;
    map.source = PaletteSource::Packing;
    map.separation = 2.0 * packing->radius;
  } else {
    colors = hsv_fallback(count);
    map.source = PaletteSource::HsvFallback;
    map.separation = min_pairwise_distance(colors);
  }
  const std::vector<int> order = deterministic_shuffle(count, options.seed);
  for (int rank = 0; rank < count; ++rank) {
    const int path = recolorable[rank];
    map.assignments[path] = {doc.paths[path].original_fill, colors[order[rank]]};
  }
  return map;
}

SvgDocument apply_recolor(const SvgDocument& doc, const RecolorMap& map) {
  SvgDocument out = doc;
  for (const auto& [index, entry] : map.assignments) {
    if (index < 0 || index >= static_cast<int>(out.paths.size()))
      throw MissingAssignment("recolor map names path " + std::to_string(index) +
                              " but the document has " + std::to_string(out.paths.size()) + " paths");
    out.paths[index].fill = entry.assigned;
  }
  return out;
}

SvgDocument restore_colors(const SvgDocument& doc, const RecolorMap& map) {
  SvgDocument out = doc;
  for (const auto& [index, entry] : map.assignments) {
    if (index < 0 || index >= static_cast<int>(out.paths.size()))
      throw MissingAssignment("recolor map names path " + std::to_string(index) +
                              " but the document has " + std::to_string(out.paths.size()) + " paths");
    out.paths[index].fill = entry.original;
    out.paths[index].original_fill = entry.original;
  }
  for (std::size_t i = 0; i < out.paths.size(); ++i)
    if (out.paths[i].fill != out.paths[i].original_fill)
      throw MissingAssignment("path " + std::to_string(i) + " is recolored but absent from the map");
  return out;
}

std::string recolor_map_to_json(const RecolorMap& map) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [index, entry] : map.assignments)
    j[std::to_string(index)] = {{"original", color_to_hex(entry.original)},
                                {"assigned", color_to_hex(entry.assigned)}};
  return j.dump(2) + "\n";
}

RecolorMap recolor_map_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("recolor map: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("recolor map: expected a JSON object");
  RecolorMap map;
  std::vector<Rgb> assigned;
  for (const auto& [key, value] : j.items()) {
    int index = -1;
    try {
      std::size_t used = 0;
      index = std::stoi(key, &used);
      if (used != key.size() || index < 0) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ConfigError("recolor map: key '" + key + "' is not a path index");
    }
    if (!value.is_object() || !value.contains("original") || !value.contains("assigned") ||
        !value["original"].is_string() || !value["assigned"].is_string())
      throw ConfigError("recolor map: entry '" + key + "' needs string fields 'original' and 'assigned'");
    RecolorEntry entry{parse_color(value["original"].get<std::string>()),
                       parse_color(value["assigned"].get<std::string>())};
    assigned.push_back(entry.assigned);
    map.assignments[index] = entry;
  }
  map.source = PaletteSource::Packing;
  map.separation = assigned.size() > 1 ? min_pairwise_distance(assigned) : 1.0;
  return map;
}

}  // namespace vecfit
