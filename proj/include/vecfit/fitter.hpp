#pragma once

#include "vecfit/motion.hpp"
#include "vecfit/objective.hpp"
#include "vecfit/raster.hpp"
#include "vecfit/svg.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace vecfit {

struct FitConfig {
  int resolution = 256;
  int keyframes = 15;
  int iterations = 2000;
  int activation_cadence = 100;
  double lr_homography = 1e-3;
  double lr_offsets = 1e-1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.9;
  double adam_eps = 1e-6;
  LossWeights weights;
  double softness = 0.7;
  double white_thresh = 0.98;
  std::uint64_t seed = 0;
  double sdf_tau = 0.0;
  /// Softness is halved for this final fraction of the iterations.
  double sharpen_fraction = 0.1;
  int checkpoint_interval = 50;

  /// ConfigError naming the first offending field.
  void validate() const;
};

/// Strict: unknown fields and wrong types raise ConfigError naming the field.
/// Loss weights live in a nested "weights" object (lambda_mse, ...).
FitConfig fit_config_from_json(std::string_view text);
std::string fit_config_to_json(const FitConfig& config);

// ---------------------------------------------------------------------------
// Adam.

/// Moments shaped like MotionParams, with one step counter per keyframe and
/// one for the shared centers (bias correction restarts on activation).
struct AdamState {
  MotionParams m;
  MotionParams v;
  std::vector<int> keyframe_steps;
  int center_steps = 0;

  static AdamState zeros_like(const MotionParams& params);
  /// Clears the moments and step counter of one keyframe.
  void reset_keyframe(int k);
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.9;
  double eps = 1e-6;
  double lr_homography = 1e-3;
  double lr_offsets = 1e-1;
  /// Learning-rate multiplier for the perspective entries p1, p2.
  double perspective_scale = 1.0;
};

/// One bias-corrected Adam update of the keyframes in `active` (keyframe 0 is
/// always skipped) and of the group centers. NonFiniteGradient is raised
/// before anything is modified.
void adam_step(MotionParams& params, const MotionParams& grads, AdamState& state, const AdamSettings& settings,
               const std::vector<int>& active);

// ---------------------------------------------------------------------------
// Progressive schedule.

struct ActivationEvent {
  int iteration = 0;
  int keyframe = 0;
};

struct Schedule {
  int iterations = 0;
  int keyframes = 0;
  std::vector<ActivationEvent> activations;  // in iteration order
  int refinement_iterations = 0;             // after the last activation
  int sharpen_start = 0;                     // first iteration at reduced softness

  /// Keyframes active during `iteration` (after that iteration's activations).
  std::vector<int> active_at(int iteration) const;
};

Schedule progressive_schedule(const FitConfig& config);

/// Copies keyframe k_new - 1's homographies and offsets into keyframe k_new.
void activate_keyframe(MotionParams& params, int k_new);

/// Uniform keyframe sampling over `frame_count` frames, first frame pinned.
std::vector<int> select_keyframes(int frame_count, int keyframes);

// ---------------------------------------------------------------------------
// Keyframe initialization.

struct KeyframeSlice {
  Eigen::Matrix<double, 8, Eigen::Dynamic> homographies;  // 8 x G
  Eigen::Matrix2Xd offsets;                               // 2 x N
};

KeyframeSlice keyframe_slice(const MotionParams& params, int k);
void set_keyframe_slice(MotionParams& params, int k, const KeyframeSlice& slice);

struct InitializerContext {
  const CanonicalGeometry& geometry;
  const MotionParams& params;  // keyframe `keyframe` already copied forward
  int keyframe = 0;
  const std::vector<RasterFrame>& history;  // renders of keyframes < keyframe
  const PreparedTarget& target;
  const std::vector<ForegroundMask>& group_masks;  // target evidence per group
  const std::vector<ForegroundMask>& path_masks;   // target evidence per document path
  RenderOptions render;
};

/// Proposes keyframe `keyframe`'s parameters; must not touch earlier keyframes.
using InitializerPlugin = std::function<KeyframeSlice(const InitializerContext&)>;

/// Integer translation in [-radius, radius]^2 (multiples of `stride`) that
/// maximizes |shift(source) & target|; ties go to the shorter shift, then to
/// scan order. Empty masks give zero.
Eigen::Vector2i best_translation(const ForegroundMask& source, const ForegroundMask& target, int radius,
                                 int stride = 2);

/// Per group: grid search of the group's rendered support against its target
/// mask, with the winning shift added to the copied homography's translation.
KeyframeSlice translation_probe_initializer(const InitializerContext& context);

/// Index of the candidate with the lowest squared error over the union of the
/// path's rendered support and its target mask, rendering the scene with only
/// that path's parameters taken from the candidate. Ties keep index 0 (the
/// copy-forward candidate).
int candidate_select(const InitializerContext& context, int path, const std::vector<KeyframeSlice>& candidates);

/// Per-path choice between the copy-forward slice and a proposal. Groups whose
/// paths all pick the proposal take its homography; otherwise the copy-forward
/// homography stays and the chosen paths' proposed positions are folded into
/// their offsets through its inverse.
KeyframeSlice merge_candidates(const CanonicalGeometry& geometry, const MotionParams& params,
                               const KeyframeSlice& copy, const KeyframeSlice& proposal,
                               const std::vector<int>& path_choice);

// ---------------------------------------------------------------------------
// Fitting.

struct FitOptions {
  InitializerPlugin initializer;      // empty: copy-forward only
  const MotionParams* resume = nullptr;
  int threads = 1;
  std::function<void(const LossReport&)> on_iteration;
  /// Written with the last good parameters when fitting aborts.
  std::string partial_checkpoint;
  /// Color distance within which a target pixel counts as a path's fill.
  /// 0 picks half the smallest distance between distinct fills.
  double palette_radius = 0.0;
};

struct FitResult {
  CanonicalGeometry geometry;
  MotionParams params;
  std::vector<LossReport> history;
  std::vector<int> frame_indices;  // target frame used for each keyframe
  double best_loss = 0.0;
  double seconds = 0.0;
};

/// Target frames brought to the working size of `geometry`.
std::vector<RasterFrame> keyframe_targets(const CanonicalGeometry& geometry, const std::vector<RasterFrame>& frames,
                                          int keyframes, std::vector<int>* indices = nullptr);

FitResult fit(const SvgDocument& doc, const std::vector<RasterFrame>& frames, const FitConfig& config,
              const FitOptions& options = {});

}  // namespace vecfit
