#include "vecfit/error.hpp"
#include "vecfit/export.hpp"
#include "vecfit/harness.hpp"

#include "json.hpp"

#include <cmath>
#include <random>

namespace vecfit {

namespace {

using nlohmann::json;

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError("synthetic spec field '" + field + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError("synthetic spec field '" + field + "' must be finite");
  return v;
}

int integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError("synthetic spec field '" + field + "' must be an integer");
  return j.get<int>();
}

}  // namespace

SyntheticSpec synthetic_spec_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synthetic spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("synthetic spec must be a JSON object");
  SyntheticSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "resolution") spec.resolution = integer(value, key);
    else if (key == "keyframes") spec.keyframes = integer(value, key);
    else if (key == "noise") spec.noise = number(value, key);
    else if (key == "seed") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0)
        throw ConfigError("synthetic spec field 'seed' must be a nonnegative integer");
      spec.seed = value.get<std::uint64_t>();
    } else if (key == "groups") {
      if (!value.is_object()) throw ConfigError("synthetic spec field 'groups' must be an object");
      for (const auto& [id, g] : value.items()) {
        if (!g.is_object()) throw ConfigError("synthetic spec field 'groups." + id + "' must be an object");
        GroupProgram program;
        for (const auto& [f, v] : g.items()) {
          const std::string field = "groups." + id + "." + f;
          if (f == "tx") program.translation.x() = number(v, field);
          else if (f == "ty") program.translation.y() = number(v, field);
          else if (f == "rotation_deg") program.rotation_deg = number(v, field);
          else if (f == "log_scale") program.log_scale = number(v, field);
          else throw ConfigError("unknown synthetic spec field '" + field + "'");
        }
        spec.groups[id] = program;
      }
    } else if (key == "paths") {
      if (!value.is_object()) throw ConfigError("synthetic spec field 'paths' must be an object");
      for (const auto& [id, p] : value.items()) {
        if (!p.is_object()) throw ConfigError("synthetic spec field 'paths." + id + "' must be an object");
        OffsetProgram program;
        for (const auto& [f, v] : p.items()) {
          const std::string field = "paths." + id + "." + f;
          if (f == "amplitude") program.amplitude = number(v, field);
          else if (f == "frequency") program.frequency = number(v, field);
          else throw ConfigError("unknown synthetic spec field '" + field + "'");
        }
        spec.paths[id] = program;
      }
    } else {
      throw ConfigError("unknown synthetic spec field '" + key + "'");
    }
  }
  if (spec.resolution < 8) throw ConfigError("synthetic spec field 'resolution' must be at least 8");
  if (spec.keyframes < 1) throw ConfigError("synthetic spec field 'keyframes' must be at least 1");
  if (spec.noise < 0.0) throw ConfigError("synthetic spec field 'noise' must be nonnegative");
  return spec;
}

MotionParams synthetic_params(const CanonicalGeometry& geom, const SvgDocument& doc, const SyntheticSpec& spec) {
  MotionParams params = init_params(geom, spec.keyframes);
  for (const auto& [id, program] : spec.groups) {
    int group = -1;
    for (std::size_t g = 0; g < doc.groups.size(); ++g)
      if (doc.groups[g].id == id) group = static_cast<int>(g);
    if (group < 0) throw ConfigError("synthetic spec names unknown group '" + id + "'");
    for (int k = 1; k < spec.keyframes; ++k) {
      const double ramp = static_cast<double>(k) / (spec.keyframes - 1);
      auto h = params.homographies[k].col(group);
      h[kTx] = ramp * program.translation.x();
      h[kTy] = ramp * program.translation.y();
      h[kTheta] = ramp * program.rotation_deg * 3.14159265358979323846 / 180.0;
      h[kSx] = ramp * program.log_scale;
      h[kSy] = ramp * program.log_scale;
    }
  }
  for (const auto& [id, program] : spec.paths) {
    int path = -1;
    for (std::size_t p = 0; p < doc.paths.size(); ++p)
      if (doc.paths[p].id == id) path = static_cast<int>(p);
    if (path < 0) throw ConfigError("synthetic spec names unknown path '" + id + "'");
    const CanonicalGeometry::PathSpan& span = geom.paths[path];
    for (int k = 1; k < spec.keyframes; ++k) {
      const double ramp = static_cast<double>(k) / (spec.keyframes - 1);
      for (int i = span.first; i < span.first + span.count; ++i)
        params.offsets[k](1, i) = program.amplitude * ramp *
                                  std::sin(2.0 * 3.14159265358979323846 * program.frequency * geom.rest(0, i) / geom.width);
    }
  }
  return params;
}

SyntheticTarget synth_target(const SvgDocument& doc, const SyntheticSpec& spec) {
  SyntheticTarget out;
  out.geometry = make_geometry_for_resolution(doc, spec.resolution);
  out.truth = synthetic_params(out.geometry, doc, spec);
  RenderOptions options;
  options.softness = kExportSoftness;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> noise(-spec.noise, spec.noise);
  for (int k = 0; k < spec.keyframes; ++k) {
    const Eigen::Matrix2Xd points = deform_keyframe(out.geometry, out.truth, k, ProjectionGuard::Throw);
    RasterFrame frame = render(scene_from_points(out.geometry, points), out.geometry.width, out.geometry.height, options);
    if (spec.noise > 0.0)
      for (Image& c : frame.rgb)
        for (Eigen::Index y = 0; y < c.rows(); ++y)
          for (Eigen::Index x = 0; x < c.cols(); ++x) c(y, x) = std::clamp(c(y, x) + noise(rng), 0.0, 1.0);
    out.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace vecfit
