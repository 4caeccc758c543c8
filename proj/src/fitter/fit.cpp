#include "vecfit/error.hpp"
#include "vecfit/fitter.hpp"
#include "vecfit/layers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace vecfit {

std::vector<RasterFrame> keyframe_targets(const CanonicalGeometry& geometry, const std::vector<RasterFrame>& frames,
                                          int keyframes, std::vector<int>* indices) {
  const std::vector<int> picked = select_keyframes(static_cast<int>(frames.size()), keyframes);
  std::vector<RasterFrame> out;
  out.reserve(picked.size());
  for (int i : picked) out.push_back(resample(frames[i], geometry.width, geometry.height));
  if (indices) *indices = picked;
  return out;
}

namespace {

struct ColorClasses {
  std::vector<Rgb> colors;
  std::vector<int> path_color;  // per document path
  double radius = 0.5;
};

ColorClasses color_classes(const CanonicalGeometry& geom, double radius) {
  ColorClasses cc;
  for (const Rgb& fill : geom.fills) {
    int found = -1;
    for (std::size_t c = 0; c < cc.colors.size(); ++c)
      if ((cc.colors[c] - fill).norm() < 1e-9) found = static_cast<int>(c);
    if (found < 0) {
      found = static_cast<int>(cc.colors.size());
      cc.colors.push_back(fill);
    }
    cc.path_color.push_back(found);
  }
  double separation = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < cc.colors.size(); ++a)
    for (std::size_t b = a + 1; b < cc.colors.size(); ++b)
      separation = std::min(separation, (cc.colors[a] - cc.colors[b]).norm());
  cc.radius = radius > 0.0 ? radius : std::min(0.5, separation / 2.0);
  return cc;
}

// Resumed fits start with every keyframe active, so there is nothing to activate.
Schedule resumed_schedule(const FitConfig& config) {
  Schedule s;
  s.iterations = config.iterations;
  s.keyframes = config.keyframes;
  s.refinement_iterations = config.iterations;
  s.sharpen_start = config.iterations - static_cast<int>(std::lround(config.sharpen_fraction * config.iterations));
  return s;
}

void write_text(const std::string& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write '" + file + "'");
  out << text;
  if (!out) throw IoError("cannot write '" + file + "'");
}

}  // namespace

FitResult fit(const SvgDocument& doc, const std::vector<RasterFrame>& frames, const FitConfig& config,
              const FitOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  const Schedule schedule = options.resume ? resumed_schedule(config) : progressive_schedule(config);

  FitResult result;
  result.geometry = make_geometry_for_resolution(doc, config.resolution);
  const CanonicalGeometry& geom = result.geometry;
  const std::vector<RasterFrame> targets = keyframe_targets(geom, frames, config.keyframes, &result.frame_indices);

  MotionParams params = init_params(geom, config.keyframes);
  if (options.resume) {
    if (!options.resume->same_shape(params))
      throw DimensionMismatch("checkpoint has " + std::to_string(options.resume->keyframes()) +
                              " keyframes; the config asks for " + std::to_string(config.keyframes));
    params = *options.resume;
  }
  if (config.iterations == 0) {
    result.params = params;
    return result;
  }

  std::vector<PreparedTarget> prepared;
  prepared.reserve(targets.size());
  for (const RasterFrame& t : targets) prepared.push_back(prepare_target(t, config.white_thresh));
  const Objective objective(geom, std::move(prepared), config.weights, config.sdf_tau);
  const ColorClasses classes = color_classes(geom, options.palette_radius);

  AdamState adam = AdamState::zeros_like(params);
  AdamSettings settings;
  settings.beta1 = config.adam_beta1;
  settings.beta2 = config.adam_beta2;
  settings.eps = config.adam_eps;
  settings.lr_homography = config.lr_homography;
  settings.lr_offsets = config.lr_offsets;
  // Perspective entries are in 1/pixels; their rate is taken per canvas width.
  settings.perspective_scale = 1.0 / std::max(geom.width, geom.height);

  RenderOptions render_options;
  render_options.softness = config.softness;
  const double final_softness =
      schedule.sharpen_start < config.iterations ? config.softness / 2.0 : config.softness;

  std::vector<int> all(static_cast<std::size_t>(config.keyframes));
  for (int k = 0; k < config.keyframes; ++k) all[k] = k;

  MotionParams best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t next_event = 0;

  try {
    for (int it = 0; it < config.iterations; ++it) {
      while (!options.resume && next_event < schedule.activations.size() &&
             schedule.activations[next_event].iteration == it) {
        const int k = schedule.activations[next_event++].keyframe;
        activate_keyframe(params, k);
        adam.reset_keyframe(k);
        if (options.initializer) {
          std::vector<RasterFrame> history;
          for (int j = 0; j < k; ++j)
            history.push_back(render(scene_from_points(geom, deform_keyframe(geom, params, j, ProjectionGuard::Clamp)),
                                     geom.width, geom.height, render_options));
          const PreparedTarget& target = objective.targets()[k];
          const std::vector<ForegroundMask> by_color = classify_color_masks(target.clean, classes.colors,
                                                                            classes.radius, config.white_thresh);
          std::vector<ForegroundMask> path_masks;
          std::vector<ForegroundMask> group_masks(geom.group_count, ForegroundMask(geom.width, geom.height, false));
          for (std::size_t p = 0; p < geom.paths.size(); ++p) {
            path_masks.push_back(by_color[classes.path_color[p]]);
            auto& gm = group_masks[geom.paths[p].group];
            gm.bits = gm.bits || path_masks.back().bits;
          }
          const InitializerContext context{geom, params, k, history, target, group_masks, path_masks, render_options};
          const KeyframeSlice copy = keyframe_slice(params, k);
          const KeyframeSlice proposal = options.initializer(context);
          std::vector<int> choice(geom.paths.size(), 0);
          for (std::size_t p = 0; p < geom.paths.size(); ++p)
            choice[p] = candidate_select(context, static_cast<int>(p), {copy, proposal});
          set_keyframe_slice(params, k, merge_candidates(geom, params, copy, proposal, choice));
        }
      }

      const std::vector<int> active = options.resume ? all : schedule.active_at(it);
      render_options.softness = it >= schedule.sharpen_start ? config.softness / 2.0 : config.softness;

      MotionParams grad;
      const LossParts parts = objective.evaluate(params, active, render_options, &grad, nullptr, options.threads);
      LossReport report;
      report.iteration = it;
      report.active_keyframes = static_cast<int>(active.size());
      report.parts = parts;
      report.total = total_loss(parts, config.weights);
      result.history.push_back(report);
      if (options.on_iteration) options.on_iteration(report);

      const bool comparable = active.size() == all.size() && render_options.softness == final_softness;
      if (comparable && it % config.checkpoint_interval == 0 && report.total < best_loss) {
        best_loss = report.total;
        best = params;
      }
      adam_step(params, grad, adam, settings, active);
    }

    render_options.softness = final_softness;
    const double final_loss = total_loss(objective.evaluate(params, all, render_options, nullptr, nullptr,
                                                            options.threads),
                                         config.weights);
    if (final_loss <= best_loss) {
      best_loss = final_loss;
      best = params;
    }
  } catch (...) {
    if (!options.partial_checkpoint.empty()) {
      try {
        write_text(options.partial_checkpoint, motion_to_json(params, geom));
      } catch (...) {
      }
    }
    throw;
  }

  result.params = best;
  result.best_loss = best_loss;
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace vecfit
