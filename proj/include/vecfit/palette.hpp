#pragma once

#include "vecfit/svg.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vecfit {

/// Largest K with a tabulated packing.
inline constexpr int kMaxTabulatedPacking = 64;

/// K equal spheres in the unit RGB cube: pairwise center distance >= 2r and
/// every center inside [r, 1 - r]^3.
struct Packing {
  double radius = 0.0;
  std::vector<Eigen::Vector3d> centers;
};

/// Tabulated packing for K <= kMaxTabulatedPacking, std::nullopt (fall back
/// to HSV colors) above that.
std::optional<Packing> packing_centers(int k);

/// K fully saturated colors with hues i/K and values alternating 1.0 / 0.6.
std::vector<Rgb> hsv_fallback(int k);

/// Seeded Fisher-Yates permutation of 0..n-1 driven by a 64-bit LCG.
std::vector<int> deterministic_shuffle(int n, std::uint64_t seed);

/// Nonzero-rule area from the 0.1-unit flattened outline.
double filled_area(const PathGeometry& path);

enum class PaletteSource { Packing, HsvFallback };

struct RecolorEntry {
  Rgb original = Rgb::Zero();
  Rgb assigned = Rgb::Zero();
};

struct RecolorMap {
  std::map<int, RecolorEntry> assignments;
  PaletteSource source = PaletteSource::Packing;
  /// Guaranteed minimum distance between any two assigned colors.
  double separation = 0.0;
};

struct PaletteOptions {
  std::uint64_t seed = 0;
  /// Paths whose fill matches one of these colors keep their color.
  std::vector<Rgb> exclude_fills;
};

RecolorMap assign_palette(const SvgDocument& doc, const PaletteOptions& options = {});
SvgDocument apply_recolor(const SvgDocument& doc, const RecolorMap& map);
SvgDocument restore_colors(const SvgDocument& doc, const RecolorMap& map);

/// `{"<path index>": {"original": "#rrggbb", "assigned": "#rrggbb"}, ...}`
std::string recolor_map_to_json(const RecolorMap& map);
RecolorMap recolor_map_from_json(std::string_view text);

}  // namespace vecfit
