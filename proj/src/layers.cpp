#include "vecfit/layers.hpp"

#include "vecfit/error.hpp"

#include <algorithm>
#include <filesystem>
#include <limits>
#include <queue>

namespace vecfit {

std::vector<ForegroundMask> classify_color_masks(const RasterFrame& frame, const std::vector<Rgb>& colors,
                                                 double radius, double white_thresh) {
  const int w = frame.width();
  const int h = frame.height();
  std::vector<ForegroundMask> masks(colors.size(), ForegroundMask(w, h, false));
  if (colors.empty()) return masks;
  const ForegroundMask fg = foreground_mask(frame, white_thresh);
  const double r2 = radius * radius;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!fg.bits(y, x)) continue;
      const Rgb px = frame.pixel(x, y);
      double best = std::numeric_limits<double>::infinity();
      int best_index = -1;
      for (std::size_t c = 0; c < colors.size(); ++c) {
        const double d2 = (px - colors[c]).squaredNorm();
        if (d2 < best) {
          best = d2;
          best_index = static_cast<int>(c);
        }
      }
      if (best <= r2) masks[best_index].bits(y, x) = true;
    }
  return masks;
}

namespace {

void finish_baselines(GroupMaskSequence& seq) {
  seq.baseline.assign(seq.masks.size(), 0.0);
  for (std::size_t g = 0; g < seq.masks.size(); ++g)
    if (!seq.masks[g].empty()) seq.baseline[g] = static_cast<double>(seq.masks[g][0].count());
}

struct Box {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive; empty when x1 < x0

  bool empty() const { return x1 < x0; }
};

Box bounding_box(const ForegroundMask& m) {
  Box b{m.width(), m.height(), -1, -1};
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.bits(y, x)) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
      }
  if (b.x1 < 0) return Box{};
  return b;
}

double box_intersection(const Box& a, const Box& b) {
  if (a.empty() || b.empty()) return 0.0;
  const int w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0) + 1;
  const int h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0) + 1;
  return w > 0 && h > 0 ? static_cast<double>(w) * h : 0.0;
}

}  // namespace

GroupMaskSequence group_masks_from_palette(const std::vector<RasterFrame>& frames, const RecolorMap& map,
                                           const SvgDocument& doc) {
  if (map.assignments.empty())
    throw PaletteRequired("mask classification needs a recolored document (empty recolor map) or user masks");
  std::vector<Rgb> colors;
  std::vector<int> color_group;
  for (const auto& [path, entry] : map.assignments) {
    if (path < 0 || path >= static_cast<int>(doc.paths.size()))
      throw MissingAssignment("recolor map names path " + std::to_string(path) + " which the document lacks");
    colors.push_back(entry.assigned);
    color_group.push_back(doc.paths[path].group);
  }
  GroupMaskSequence seq;
  seq.masks.assign(doc.groups.size(), {});
  for (const RasterFrame& frame : frames) {
    const std::vector<ForegroundMask> by_color = classify_color_masks(frame, colors, map.separation / 2.0);
    std::vector<ForegroundMask> groups(doc.groups.size(), ForegroundMask(frame.width(), frame.height(), false));
    for (std::size_t c = 0; c < colors.size(); ++c) groups[color_group[c]].bits = groups[color_group[c]].bits || by_color[c].bits;
    for (std::size_t g = 0; g < groups.size(); ++g) seq.masks[g].push_back(std::move(groups[g]));
  }
  finish_baselines(seq);
  return seq;
}

GroupMaskSequence load_group_masks(const std::string& dir, const SvgDocument& doc) {
  GroupMaskSequence seq;
  for (const Group& group : doc.groups) {
    const std::filesystem::path sub = std::filesystem::path(dir) / group.id;
    std::vector<ForegroundMask> masks;
    for (int i = 0;; ++i) {
      const std::filesystem::path file = sub / frame_file_name(i);
      if (!std::filesystem::exists(file)) break;
      masks.push_back(read_mask_png(file.string()));
    }
    if (masks.empty()) throw IoError("no masks for group '" + group.id + "' in '" + sub.string() + "'");
    seq.masks.push_back(std::move(masks));
  }
  for (const auto& m : seq.masks)
    if (m.size() != seq.masks.front().size())
      throw DimensionMismatch("mask directories hold different frame counts");
  for (const auto& m : seq.masks)
    for (const ForegroundMask& f : m)
      if (f.width() != seq.masks.front().front().width() || f.height() != seq.masks.front().front().height())
        throw DimensionMismatch("mask images differ in size");
  finish_baselines(seq);
  return seq;
}

std::optional<double> occlusion_score(const GroupMaskSequence& seq, int i, int j) {
  if (i < 0 || j < 0 || i >= seq.groups() || j >= seq.groups() || i == j) return std::nullopt;
  if (!(seq.baseline[i] > 0.0) || !(seq.baseline[j] > 0.0)) return std::nullopt;
  double weighted = 0.0;
  double total = 0.0;
  for (int t = 0; t < seq.frames(); ++t) {
    const double w = box_intersection(bounding_box(seq.masks[i][t]), bounding_box(seq.masks[j][t]));
    if (w == 0.0) continue;
    auto exclusive = [&](int g) {
      BitImage others = BitImage::Constant(seq.masks[g][t].height(), seq.masks[g][t].width(), false);
      for (int o = 0; o < seq.groups(); ++o)
        if (o != g) others = others || seq.masks[o][t].bits;
      return static_cast<double>((seq.masks[g][t].bits && !others).count());
    };
    const double ri = exclusive(i) / seq.baseline[i];
    const double rj = exclusive(j) / seq.baseline[j];
    weighted += w * (ri - rj);
    total += w;
  }
  if (total == 0.0) return std::nullopt;
  return weighted / total;
}

std::optional<double> OcclusionScores::score(int i, int j) const {
  const auto it = scores.find({i, j});
  if (it == scores.end()) return std::nullopt;
  return it->second;
}

OcclusionScores compute_occlusion_scores(const GroupMaskSequence& seq, double epsilon) {
  OcclusionScores out;
  out.epsilon = epsilon;
  out.groups = seq.groups();
  for (int i = 0; i < seq.groups(); ++i)
    for (int j = i + 1; j < seq.groups(); ++j)
      if (const auto s = occlusion_score(seq, i, j)) {
        out.scores[{i, j}] = *s;
        out.scores[{j, i}] = -*s;
      }
  return out;
}

ReorderResult reorder(const SvgDocument& doc, const OcclusionScores& scores) {
  ReorderResult result;
  result.painter_order = doc.painter_order;
  const int groups = static_cast<int>(doc.groups.size());
  if (scores.groups != 0 && scores.groups != groups)
    throw DimensionMismatch("occlusion scores cover " + std::to_string(scores.groups) + " groups, document has " +
                            std::to_string(groups));

  // Rank of each group in the original painter order (first appearance).
  std::vector<int> rank(groups, std::numeric_limits<int>::max());
  std::vector<int> group_sequence;
  for (int p : doc.painter_order) {
    const int g = doc.paths[p].group;
    if (rank[g] == std::numeric_limits<int>::max()) {
      rank[g] = static_cast<int>(group_sequence.size());
      group_sequence.push_back(g);
    }
  }

  // An edge back -> front means "paint back first".
  std::vector<std::vector<int>> after(groups);
  std::vector<int> indegree(groups, 0);
  for (const auto& [pair, s] : scores.scores) {
    const auto [i, j] = pair;
    if (s > scores.epsilon) {
      result.edges.push_back({i, j});
      after[j].push_back(i);
      ++indegree[i];
    }
  }
  if (result.edges.empty()) return result;

  auto later = [&](int a, int b) { return rank[a] > rank[b]; };
  std::priority_queue<int, std::vector<int>, decltype(later)> ready(later);
  for (int g : group_sequence)
    if (indegree[g] == 0) ready.push(g);
  std::vector<int> sorted;
  while (!ready.empty()) {
    const int g = ready.top();
    ready.pop();
    sorted.push_back(g);
    for (int next : after[g])
      if (--indegree[next] == 0) ready.push(next);
  }
  if (sorted.size() != group_sequence.size()) {
    result.cyclic = true;
    result.warnings.push_back("occlusion evidence is cyclic; keeping the original layer order");
    return result;
  }
  if (sorted == group_sequence) return result;

  std::vector<int> order;
  order.reserve(doc.painter_order.size());
  for (int g : sorted)
    for (int p : doc.painter_order)
      if (doc.paths[p].group == g) order.push_back(p);
  result.painter_order = order;
  return result;
}

SvgDocument apply_painter_order(const SvgDocument& doc, const std::vector<int>& painter_order) {
  std::vector<int> check = painter_order;
  std::sort(check.begin(), check.end());
  for (std::size_t i = 0; i < check.size(); ++i)
    if (check[i] != static_cast<int>(i) || check.size() != doc.paths.size())
      throw DimensionMismatch("painter order is not a permutation of the document's paths");

  SvgDocument out;
  out.canvas_width = doc.canvas_width;
  out.canvas_height = doc.canvas_height;
  std::vector<int> group_map(doc.groups.size(), -1);
  for (int p : painter_order) {
    PathGeometry path = doc.paths[p];
    const int old_group = path.group;
    if (group_map[old_group] < 0) {
      group_map[old_group] = static_cast<int>(out.groups.size());
      Group g = doc.groups[old_group];
      g.path_indices.clear();
      out.groups.push_back(g);
    }
    path.group = group_map[old_group];
    out.groups[path.group].path_indices.push_back(static_cast<int>(out.paths.size()));
    out.painter_order.push_back(static_cast<int>(out.paths.size()));
    out.paths.push_back(std::move(path));
  }
  out.update_centroids();
  return out;
}

}  // namespace vecfit
