#include "vecfit/export.hpp"

#include "vecfit/error.hpp"

#include "svg/format.hpp"

#include <algorithm>

namespace vecfit {

namespace {

bool at_rest(const MotionParams& params, int k) {
  return params.homographies[k].isZero(0.0) && params.offsets[k].isZero(0.0);
}

std::vector<Subpath> subpaths_from(const Eigen::Matrix2Xd& points, const CanonicalGeometry::PathSpan& span) {
  std::vector<Subpath> out;
  int at = span.first;
  for (int size : span.subpath_sizes) {
    Subpath s;
    for (int i = 0; i < size; ++i) s.points.push_back(points.col(at + i));
    at += size;
    out.push_back(std::move(s));
  }
  return out;
}

double fit_scale(const SvgDocument& doc, int width, int height) {
  if (width < 1 || height < 1) throw ConfigError("frame size must be positive");
  return std::min(width / doc.canvas_width, height / doc.canvas_height);
}

}  // namespace

Eigen::Matrix2Xd keyframe_user_points(const SvgDocument& doc, const CanonicalGeometry& geom,
                                      const MotionParams& params, int k) {
  if (static_cast<int>(doc.control_point_count()) != geom.point_count())
    throw DimensionMismatch("document does not match the fitted geometry");
  if (at_rest(params, k)) return flatten_params(doc).points;
  return deform_keyframe(geom, params, k, ProjectionGuard::Throw) / geom.pixels_per_unit;
}

BakedAnimation bake_keyframes(const SvgDocument& doc, const CanonicalGeometry& geom, const MotionParams& params,
                              const RecolorMap* map) {
  const SvgDocument colored = map ? restore_colors(doc, *map) : doc;
  BakedAnimation baked;
  baked.duration = params.keyframes() / 5.0;
  for (int k = 0; k < params.keyframes(); ++k) baked.keyframes.push_back(keyframe_user_points(doc, geom, params, k));
  const auto rounded = [](double v) { return detail::format_fixed(v, 4); };
  for (int p : colored.painter_order) {
    BakedPath path;
    path.source = p;
    path.id = colored.paths[p].id;
    path.fill = colored.paths[p].fill;
    for (int k = 0; k < params.keyframes(); ++k) {
      const std::vector<Subpath> subpaths = subpaths_from(baked.keyframes[k], geom.paths[p]);
      if (k == 0 && at_rest(params, 0)) path.d.push_back(detail::path_data(subpaths, detail::format_double));
      else path.d.push_back(detail::path_data(subpaths, rounded));
    }
    baked.paths.push_back(std::move(path));
  }
  return baked;
}

std::string key_times(int keyframes) {
  std::string out;
  for (int k = 0; k < keyframes; ++k) {
    if (k) out += ';';
    if (k == keyframes - 1) out += '1';
    else out += detail::format_fixed(static_cast<double>(k) / (keyframes - 1), 6);
  }
  return out;
}

std::string write_animated_svg(const BakedAnimation& baked, const SvgDocument& doc, const AnimationTiming& timing) {
  using detail::format_double;
  const int keyframes = baked.keyframe_count();
  const double duration = timing.duration > 0.0 ? timing.duration : keyframes / 5.0;
  const std::string repeat =
      timing.repeat == Repeat::Indefinite ? "indefinite" : std::to_string(std::max(1, timing.repeat_count));

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(doc.canvas_width) +
                    "\" height=\"" + format_double(doc.canvas_height) + "\" viewBox=\"0 0 " +
                    format_double(doc.canvas_width) + " " + format_double(doc.canvas_height) + "\">\n";
  int open_group = -1;
  for (const BakedPath& path : baked.paths) {
    const PathGeometry& source = doc.paths[path.source];
    const Group& group = doc.groups[source.group];
    const bool bare = group.path_indices.size() == 1 && group.id == source.id;
    if (source.group != open_group || bare) {
      if (open_group >= 0) out += "  </g>\n";
      open_group = -1;
      if (!bare) {
        open_group = source.group;
        out += "  <g id=\"" + detail::xml_escape(group.id) + "\">\n";
      }
    }
    const std::string indent = open_group >= 0 ? "    " : "  ";
    out += indent + "<path id=\"" + detail::xml_escape(path.id) + "\" d=\"" + path.d.front() + "\" fill=\"" +
           detail::fill_attribute(path.fill) + "\"";
    if (keyframes <= 1) {
      out += "/>\n";
      continue;
    }
    out += ">\n" + indent + "  <animate attributeName=\"d\" dur=\"" + format_double(duration) +
           "s\" repeatCount=\"" + repeat + "\" calcMode=\"linear\" keyTimes=\"" + key_times(keyframes) +
           "\" values=\"";
    for (int k = 0; k < keyframes; ++k) {
      if (k) out += ';';
      out += path.d[k];
    }
    out += "\"/>\n" + indent + "</path>\n";
  }
  if (open_group >= 0) out += "  </g>\n";
  out += "</svg>\n";
  return out;
}

RasterFrame render_document(const SvgDocument& doc, int width, int height, double softness) {
  RenderOptions options;
  options.softness = softness;
  return render(make_scene(doc, fit_scale(doc, width, height)), width, height, options);
}

std::vector<RasterFrame> render_keyframes(const SvgDocument& doc, const CanonicalGeometry& geom,
                                          const MotionParams& params, int width, int height, double softness) {
  std::vector<RasterFrame> frames;
  for (int k = 0; k < params.keyframes(); ++k) {
    const SvgDocument posed = unflatten_params(doc, keyframe_user_points(doc, geom, params, k));
    frames.push_back(render_document(posed, width, height, softness));
  }
  return frames;
}

std::vector<std::string> write_frames(const SvgDocument& doc, const CanonicalGeometry& geom,
                                      const MotionParams& params, int width, int height, const std::string& outdir) {
  return write_frame_sequence(outdir, render_keyframes(doc, geom, params, width, height));
}

}  // namespace vecfit
