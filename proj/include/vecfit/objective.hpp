#pragma once

#include "vecfit/motion.hpp"
#include "vecfit/raster.hpp"

#include <array>
#include <string>
#include <vector>

namespace vecfit {

struct LossWeights {
  double mse = 1000.0;
  double spatial = 0.5;
  double g1 = 10.0;
  double sdf = 1.0;
};

/// Adjacent control-point pairs within each subpath (cyclic), weighted by
/// exp(-(rest distance / sigma)^2).
struct AdjacencySet {
  std::vector<std::array<int, 2>> pairs;
  std::vector<double> weights;
  double sigma = 1.0;
};

AdjacencySet build_adjacency(const CanonicalGeometry& geom, double sigma);

/// Anchor a_j with incoming handle c-_j and outgoing handle c+_j, as flat
/// control-point indices.
struct SmoothJoint {
  int anchor = 0;
  int incoming = 0;
  int outgoing = 0;
};

struct SmoothJointSet {
  std::vector<SmoothJoint> joints;
};

/// Joints whose rest-pose turn between (a - c-) and (c+ - a) is at most
/// `max_turn_degrees`. Joints with a zero-length rest tangent are skipped.
SmoothJointSet build_smooth_joints(const CanonicalGeometry& geom, double max_turn_degrees = 10.0);

// Single-keyframe terms, not divided by the keyframe count. Gradients are
// accumulated into the optional output (which must be presized).

/// mean over pixels and channels of (blur(rendered) - blurred_target)^2.
double mse_term(const RasterFrame& rendered, const RasterFrame& blurred_target, RasterFrame* grad = nullptr);
double spatial_term(const Eigen::Matrix2Xd& offsets, const AdjacencySet& adj, Eigen::Matrix2Xd* grad = nullptr);
/// Mean of 1 - cos over the joints.
double g1_term(const Eigen::Matrix2Xd& points, const SmoothJointSet& joints, Eigen::Matrix2Xd* grad = nullptr);
/// Mean of max(0, D(q) - tau)^2 over all control points.
double sdf_term(const Eigen::Matrix2Xd& points, const SdfMap& sdf, double tau, Eigen::Matrix2Xd* grad = nullptr);

// Keyframe-averaged losses.

double loss_mse(const std::vector<RasterFrame>& rendered, const std::vector<RasterFrame>& targets,
                std::vector<RasterFrame>* grads = nullptr);
double loss_spatial(const std::vector<Eigen::Matrix2Xd>& offsets, const AdjacencySet& adj,
                    std::vector<Eigen::Matrix2Xd>* grads = nullptr);
double loss_g1(const std::vector<Eigen::Matrix2Xd>& points, const SmoothJointSet& joints,
               std::vector<Eigen::Matrix2Xd>* grads = nullptr);
double loss_sdf(const std::vector<Eigen::Matrix2Xd>& points, const std::vector<SdfMap>& sdf, double tau,
                std::vector<Eigen::Matrix2Xd>* grads = nullptr);

struct LossParts {
  double mse = 0.0;
  double spatial = 0.0;
  double g1 = 0.0;
  double sdf = 0.0;
};

double total_loss(const LossParts& parts, const LossWeights& weights);

/// Weighted sum of per-term gradients (all with the same shape).
MotionParams combine_gradients(const MotionParams& mse, const MotionParams& spatial, const MotionParams& g1,
                               const MotionParams& sdf, const LossWeights& weights);

struct LossReport {
  int iteration = 0;
  int active_keyframes = 0;
  LossParts parts;
  double total = 0.0;

  std::string to_jsonl() const;
};

/// Targets prepared once per keyframe: cleaned and blurred colors plus the
/// SDF map of the foreground.
struct PreparedTarget {
  RasterFrame clean;
  RasterFrame blurred;
  ForegroundMask mask;
  SdfMap sdf;
};

PreparedTarget prepare_target(const RasterFrame& frame, double white_thresh = 0.98);

/// Full objective over a set of active keyframes.
class Objective {
 public:
  Objective(const CanonicalGeometry& geom, std::vector<PreparedTarget> targets, LossWeights weights,
            double sdf_tau = 0.0);

  const CanonicalGeometry& geometry() const { return geom_; }
  const std::vector<PreparedTarget>& targets() const { return targets_; }
  const LossWeights& weights() const { return weights_; }
  const AdjacencySet& adjacency() const { return adjacency_; }
  const SmoothJointSet& joints() const { return joints_; }

  /// Raw parts averaged over `active`; the weighted gradient (over every
  /// keyframe, zero outside `active`) goes to `grad` when given. With
  /// `plans` (one per keyframe) the outline tessellation is held fixed.
  LossParts evaluate(const MotionParams& params, const std::vector<int>& active, const RenderOptions& options,
                     MotionParams* grad = nullptr, const std::vector<ScenePlan>* plans = nullptr,
                     int threads = 1) const;

  std::vector<ScenePlan> plan(const MotionParams& params, const RenderOptions& options) const;

 private:
  struct KeyframeResult {
    LossParts parts;
    KeyframeGradient grad;
    Eigen::Matrix2Xd offset_grad;
  };
  KeyframeResult evaluate_keyframe(const MotionParams& params, int k, const RenderOptions& options,
                                   bool want_grad, const ScenePlan* plan) const;

  CanonicalGeometry geom_;
  std::vector<PreparedTarget> targets_;
  LossWeights weights_;
  double sdf_tau_;
  AdjacencySet adjacency_;
  SmoothJointSet joints_;
};

}  // namespace vecfit
