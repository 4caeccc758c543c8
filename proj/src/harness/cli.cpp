#include "vecfit/error.hpp"
#include "vecfit/export.hpp"
#include "vecfit/fitter.hpp"
#include "vecfit/harness.hpp"
#include "vecfit/layers.hpp"
#include "vecfit/palette.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace vecfit {

namespace {

std::string read_text(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read '" + file + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& file, const std::string& text) {
  const std::filesystem::path parent = std::filesystem::path(file).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write '" + file + "'");
  out << text;
  if (!out) throw IoError("cannot write '" + file + "'");
}

int worker_threads() {
  const char* env = std::getenv("VECFIT_THREADS");
  if (env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) throw ConfigError("VECFIT_THREADS must be a positive integer");
    return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Geometry at the checkpoint's working scale, then the parameters.
std::pair<CanonicalGeometry, MotionParams> load_checkpoint(const std::string& file, const SvgDocument& doc) {
  const std::string text = read_text(file);
  double ppu = 0.0;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.is_object() && j.contains("pixels_per_unit") && j["pixels_per_unit"].is_number())
      ppu = j["pixels_per_unit"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint '" + file + "': " + e.what());
  }
  CanonicalGeometry geom =
      ppu > 0.0 ? make_geometry(doc, ppu) : make_geometry_for_resolution(doc, FitConfig{}.resolution);
  MotionParams params = motion_from_json(text, geom);
  return {std::move(geom), std::move(params)};
}

std::string default_sibling(const std::string& file, const std::string& suffix) {
  std::filesystem::path p(file);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

struct Common {
  std::string svg;
  bool lenient = false;
};

SvgDocument load_input(const Common& c) {
  ParseOptions options;
  options.strict = !c.lenient;
  std::vector<std::string> warnings;
  SvgDocument doc = load_svg(c.svg, options, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  return doc;
}

std::vector<Rgb> parse_colors(const std::vector<std::string>& texts) {
  std::vector<Rgb> colors;
  for (const std::string& t : texts) colors.push_back(parse_color(t));
  return colors;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Fit a static SVG's geometry to a target frame sequence and export an animated SVG."};
  app.require_subcommand(1);
  app.fallthrough();
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "Report errors as JSON on stderr");

  // recolor
  Common recolor_in;
  std::string recolor_out, recolor_map;
  std::uint64_t recolor_seed = 0;
  std::vector<std::string> recolor_exclude;
  CLI::App* recolor = app.add_subcommand("recolor", "Assign well-separated palette colors to every path");
  recolor->add_option("--svg", recolor_in.svg, "Input SVG")->required();
  recolor->add_option("--out", recolor_out, "Recolored SVG")->required();
  recolor->add_option("--map", recolor_map, "Recolor map JSON")->required();
  recolor->add_option("--seed", recolor_seed, "Shuffle seed");
  recolor->add_option("--exclude", recolor_exclude, "Fill colors to keep as they are");
  recolor->add_flag("--lenient", recolor_in.lenient, "Ignore strokes, opacity and fill rules instead of failing");

  // fit
  Common fit_in;
  std::string fit_frames, fit_out, fit_config, fit_resume, fit_init = "probe", fit_log, fit_ckpt, fit_map,
                                                              fit_map_out;
  bool fit_no_recolor = false;
  CLI::App* fitcmd = app.add_subcommand("fit", "Fit keyframed motion to a frame sequence");
  fitcmd->add_option("--svg", fit_in.svg, "Input SVG")->required();
  fitcmd->add_option("--frames", fit_frames, "Directory of frame_%04d.png targets")->required();
  fitcmd->add_option("--out", fit_out, "Animated SVG output")->required();
  fitcmd->add_option("--config", fit_config, "FitConfig JSON");
  fitcmd->add_option("--resume", fit_resume, "Checkpoint to continue from");
  fitcmd->add_option("--init", fit_init, "Keyframe initializer")->check(CLI::IsMember({"probe", "none"}));
  fitcmd->add_flag("--no-recolor", fit_no_recolor, "Fit with the document's own colors");
  fitcmd->add_option("--log", fit_log, "Per-iteration loss log (JSON lines)");
  fitcmd->add_option("--ckpt", fit_ckpt, "Checkpoint output (default <out>.ckpt.json)");
  fitcmd->add_option("--map", fit_map, "Use this recolor map instead of assigning one");
  fitcmd->add_option("--map-out", fit_map_out, "Write the recolor map used");
  fitcmd->add_flag("--lenient", fit_in.lenient, "Ignore strokes, opacity and fill rules instead of failing");

  // export
  Common export_in;
  std::string export_ckpt, export_out, export_frames, export_map;
  int export_size = 720;
  double export_dur = 0.0;
  int export_repeat = 0;
  CLI::App* exportcmd = app.add_subcommand("export", "Write an animated SVG (and previews) from a checkpoint");
  exportcmd->add_option("--svg", export_in.svg, "Input SVG (original colors)")->required();
  exportcmd->add_option("--ckpt", export_ckpt, "Checkpoint JSON")->required();
  exportcmd->add_option("--out", export_out, "Animated SVG output")->required();
  exportcmd->add_option("--frames-out", export_frames, "Directory for preview PNGs");
  exportcmd->add_option("--size", export_size, "Preview size (longer side, pixels)")->check(CLI::PositiveNumber);
  exportcmd->add_option("--dur", export_dur, "Duration in seconds (default K/5)");
  exportcmd->add_option("--repeat", export_repeat, "Repeat count (default indefinite)");
  exportcmd->add_option("--map", export_map, "Recolor map, when --svg is the recolored document");
  exportcmd->add_flag("--lenient", export_in.lenient, "Ignore strokes, opacity and fill rules instead of failing");

  // reorder
  Common reorder_in;
  std::string reorder_frames, reorder_map, reorder_out, reorder_masks, reorder_map_out;
  double reorder_epsilon = 0.05;
  CLI::App* reordercmd = app.add_subcommand("reorder", "Estimate the painter order from mask evidence");
  reordercmd->add_option("--svg", reorder_in.svg, "Input SVG")->required();
  reordercmd->add_option("--frames", reorder_frames, "Directory of palette-colored frames");
  reordercmd->add_option("--map", reorder_map, "Recolor map used for the frames");
  reordercmd->add_option("--masks", reorder_masks, "Mask directory laid out as <group id>/frame_%04d.png");
  reordercmd->add_option("--out", reorder_out, "Reordered SVG")->required();
  reordercmd->add_option("--map-out", reorder_map_out, "Recolor map re-indexed for the reordered SVG");
  reordercmd->add_option("--epsilon", reorder_epsilon, "Ambiguity threshold");
  reordercmd->add_flag("--lenient", reorder_in.lenient, "Ignore strokes, opacity and fill rules instead of failing");

  // synth
  Common synth_in;
  std::string synth_out, synth_spec, synth_gt, synth_map, synth_map_in;
  std::uint64_t synth_seed = 0;
  bool synth_no_recolor = false;
  CLI::App* synthcmd = app.add_subcommand("synth", "Render a synthetic target sequence with known motion");
  synthcmd->add_option("--svg", synth_in.svg, "Input SVG")->required();
  synthcmd->add_option("--out", synth_out, "Output frame directory")->required();
  synthcmd->add_option("--spec", synth_spec, "SyntheticSpec JSON");
  synthcmd->add_option("--gt", synth_gt, "Ground-truth checkpoint (default <out>/gt.json)");
  synthcmd->add_option("--map-out", synth_map, "Recolor map (default <out>/map.json)");
  synthcmd->add_option("--map", synth_map_in, "Use this recolor map instead of assigning one");
  synthcmd->add_option("--seed", synth_seed, "Palette seed");
  synthcmd->add_flag("--no-recolor", synth_no_recolor, "Render with the document's own colors");
  synthcmd->add_flag("--lenient", synth_in.lenient, "Ignore strokes, opacity and fill rules instead of failing");

  // eval
  Common eval_in;
  std::string eval_ckpt, eval_frames, eval_gt, eval_out, eval_map;
  CLI::App* evalcmd = app.add_subcommand("eval", "Compare a fitted checkpoint with target frames");
  evalcmd->add_option("--svg", eval_in.svg, "Input SVG")->required();
  evalcmd->add_option("--ckpt", eval_ckpt, "Fitted checkpoint")->required();
  evalcmd->add_option("--frames", eval_frames, "Target frame directory")->required();
  evalcmd->add_option("--gt", eval_gt, "Ground-truth checkpoint");
  evalcmd->add_option("--map", eval_map, "Recolor map applied before rendering");
  evalcmd->add_option("--out", eval_out, "Report JSON (default stdout)");
  evalcmd->add_flag("--lenient", eval_in.lenient, "Ignore strokes, opacity and fill rules instead of failing");

  if (argc <= 1) {
    std::cout << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*recolor) {
      const SvgDocument doc = load_input(recolor_in);
      PaletteOptions options;
      options.seed = recolor_seed;
      options.exclude_fills = parse_colors(recolor_exclude);
      const RecolorMap map = assign_palette(doc, options);
      write_text(recolor_out, serialize_static(apply_recolor(doc, map)));
      write_text(recolor_map, recolor_map_to_json(map));
      std::cout << "recolored " << map.assignments.size() << " paths, separation "
                << map.separation << "\n";
    } else if (*fitcmd) {
      const SvgDocument original = load_input(fit_in);
      FitConfig config;
      if (!fit_config.empty()) config = fit_config_from_json(read_text(fit_config));
      SvgDocument doc = original;
      RecolorMap map;
      if (!fit_map.empty()) {
        map = recolor_map_from_json(read_text(fit_map));
        doc = apply_recolor(original, map);
      } else if (!fit_no_recolor) {
        PaletteOptions options;
        options.seed = config.seed;
        map = assign_palette(original, options);
        doc = apply_recolor(original, map);
      }
      const std::vector<RasterFrame> frames = read_frame_sequence(fit_frames);

      FitOptions options;
      options.threads = worker_threads();
      if (fit_init == "probe") options.initializer = translation_probe_initializer;
      if (!map.assignments.empty()) options.palette_radius = map.separation / 2.0;
      if (fit_ckpt.empty()) fit_ckpt = default_sibling(fit_out, ".ckpt.json");
      options.partial_checkpoint = default_sibling(fit_ckpt, ".partial.json");
      MotionParams resume;
      if (!fit_resume.empty()) {
        resume = motion_from_json(read_text(fit_resume), make_geometry_for_resolution(doc, config.resolution));
        options.resume = &resume;
      }
      std::ofstream log;
      if (!fit_log.empty()) {
        log.open(fit_log, std::ios::binary);
        if (!log) throw IoError("cannot write '" + fit_log + "'");
        options.on_iteration = [&log](const LossReport& r) { log << r.to_jsonl() << "\n"; };
      }
      const FitResult result = fit(doc, frames, config, options);
      write_text(fit_ckpt, motion_to_json(result.params, result.geometry));
      const BakedAnimation baked = bake_keyframes(original, result.geometry, result.params);
      write_text(fit_out, write_animated_svg(baked, original));
      if (!fit_map_out.empty()) write_text(fit_map_out, recolor_map_to_json(map));
      nlohmann::ordered_json summary;
      summary["iterations"] = result.history.size();
      summary["best_loss"] = result.best_loss;
      summary["seconds"] = result.seconds;
      summary["checkpoint"] = fit_ckpt;
      std::cout << summary.dump() << "\n";
    } else if (*exportcmd) {
      SvgDocument doc = load_input(export_in);
      RecolorMap map;
      if (!export_map.empty()) map = recolor_map_from_json(read_text(export_map));
      const auto [geom, params] = load_checkpoint(export_ckpt, doc);
      const BakedAnimation baked = bake_keyframes(doc, geom, params, export_map.empty() ? nullptr : &map);
      if (!export_map.empty()) doc = restore_colors(doc, map);
      AnimationTiming timing;
      timing.duration = export_dur;
      if (export_repeat > 0) {
        timing.repeat = Repeat::Count;
        timing.repeat_count = export_repeat;
      }
      write_text(export_out, write_animated_svg(baked, doc, timing));
      if (!export_frames.empty()) {
        const double side = std::max(doc.canvas_width, doc.canvas_height);
        const int w = std::max(1, static_cast<int>(std::lround(doc.canvas_width / side * export_size)));
        const int h = std::max(1, static_cast<int>(std::lround(doc.canvas_height / side * export_size)));
        write_frames(doc, geom, params, w, h, export_frames);
      }
    } else if (*reordercmd) {
      const SvgDocument doc = load_input(reorder_in);
      RecolorMap map;
      if (!reorder_map.empty()) map = recolor_map_from_json(read_text(reorder_map));
      GroupMaskSequence masks;
      if (!reorder_masks.empty()) {
        masks = load_group_masks(reorder_masks, doc);
      } else {
        if (reorder_frames.empty()) throw ConfigError("reorder needs --frames (with --map) or --masks");
        masks = group_masks_from_palette(read_frame_sequence(reorder_frames), map, doc);
      }
      const ReorderResult result = reorder(doc, compute_occlusion_scores(masks, reorder_epsilon));
      for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";
      write_text(reorder_out, serialize_static(apply_painter_order(doc, result.painter_order)));
      if (!reorder_map_out.empty()) {
        RecolorMap remapped = map;
        remapped.assignments.clear();
        for (std::size_t i = 0; i < result.painter_order.size(); ++i) {
          const auto it = map.assignments.find(result.painter_order[i]);
          if (it != map.assignments.end()) remapped.assignments[static_cast<int>(i)] = it->second;
        }
        write_text(reorder_map_out, recolor_map_to_json(remapped));
      }
      nlohmann::ordered_json summary;
      summary["painter_order"] = result.painter_order;
      summary["cyclic"] = result.cyclic;
      std::cout << summary.dump() << "\n";
    } else if (*synthcmd) {
      const SvgDocument original = load_input(synth_in);
      SyntheticSpec spec;
      if (!synth_spec.empty()) spec = synthetic_spec_from_json(read_text(synth_spec));
      SvgDocument doc = original;
      RecolorMap map;
      if (!synth_map_in.empty()) {
        map = recolor_map_from_json(read_text(synth_map_in));
        doc = apply_recolor(original, map);
      } else if (!synth_no_recolor) {
        PaletteOptions options;
        options.seed = synth_seed;
        map = assign_palette(original, options);
        doc = apply_recolor(original, map);
      }
      const SyntheticTarget target = synth_target(doc, spec);
      write_frame_sequence(synth_out, target.frames);
      if (synth_gt.empty()) synth_gt = (std::filesystem::path(synth_out) / "gt.json").string();
      write_text(synth_gt, motion_to_json(target.truth, target.geometry));
      if (!synth_no_recolor) {
        if (synth_map.empty()) synth_map = (std::filesystem::path(synth_out) / "map.json").string();
        write_text(synth_map, recolor_map_to_json(map));
      }
    } else if (*evalcmd) {
      SvgDocument doc = load_input(eval_in);
      if (!eval_map.empty()) doc = apply_recolor(doc, recolor_map_from_json(read_text(eval_map)));
      const auto [geom, params] = load_checkpoint(eval_ckpt, doc);
      MotionParams truth;
      if (!eval_gt.empty()) truth = motion_from_json(read_text(eval_gt), geom);
      const EvalReport report =
          eval_fit(geom, params, read_frame_sequence(eval_frames), eval_gt.empty() ? nullptr : &truth);
      if (eval_out.empty()) std::cout << report.to_json();
      else write_text(eval_out, report.to_json());
    }
  } catch (const Error& e) {
    if (json_errors) {
      nlohmann::ordered_json j;
      j["error"] = e.kind();
      j["message"] = e.what();
      std::cerr << j.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    if (json_errors) {
      nlohmann::ordered_json j;
      j["error"] = "IoError";
      j["message"] = e.what();
      std::cerr << j.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 2;
  }
  return 0;
}

}  // namespace vecfit
