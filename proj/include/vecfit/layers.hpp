#pragma once

#include "vecfit/palette.hpp"
#include "vecfit/raster.hpp"
#include "vecfit/svg.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vecfit {

/// Per group, one binary mask per frame.
struct GroupMaskSequence {
  std::vector<std::vector<ForegroundMask>> masks;  // [group][frame]
  std::vector<double> baseline;                    // frame-0 area per group, pixels

  int groups() const { return static_cast<int>(masks.size()); }
  int frames() const { return masks.empty() ? 0 : static_cast<int>(masks[0].size()); }
};

/// For every color, the foreground pixels whose nearest color (L2 in RGB) it
/// is, provided that distance is at most `radius`. Pixels at least as light
/// as `white_thresh` in every channel are background.
std::vector<ForegroundMask> classify_color_masks(const RasterFrame& frame, const std::vector<Rgb>& colors,
                                                 double radius, double white_thresh = 0.98);

/// Group masks from palette-colored frames. Throws PaletteRequired when the
/// map is empty.
GroupMaskSequence group_masks_from_palette(const std::vector<RasterFrame>& frames, const RecolorMap& map,
                                           const SvgDocument& doc);
/// Group masks from `dir/<group id>/frame_%04d.png`.
GroupMaskSequence load_group_masks(const std::string& dir, const SvgDocument& doc);

/// Area-weighted mean of R_i - R_j over frames where the tight bounding boxes
/// of both masks intersect; std::nullopt when they never do (or a group has
/// no frame-0 area).
std::optional<double> occlusion_score(const GroupMaskSequence& seq, int i, int j);

struct OcclusionScores {
  std::map<std::pair<int, int>, double> scores;  // both (i, j) and (j, i)
  double epsilon = 0.05;
  int groups = 0;

  std::optional<double> score(int i, int j) const;
};

OcclusionScores compute_occlusion_scores(const GroupMaskSequence& seq, double epsilon = 0.05);

struct ReorderResult {
  std::vector<int> painter_order;
  std::vector<std::array<int, 2>> edges;  // {front group, back group}
  bool cyclic = false;
  std::vector<std::string> warnings;
};

ReorderResult reorder(const SvgDocument& doc, const OcclusionScores& scores);

/// Copy of `doc` with its paths and groups re-listed in `painter_order`, so
/// that document order and painter order coincide.
SvgDocument apply_painter_order(const SvgDocument& doc, const std::vector<int>& painter_order);

}  // namespace vecfit
