#include "vecfit/objective.hpp"

#include "vecfit/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace vecfit {

AdjacencySet build_adjacency(const CanonicalGeometry& geom, double sigma) {
  AdjacencySet adj;
  adj.sigma = sigma;
  for (const CanonicalGeometry::PathSpan& span : geom.paths) {
    int base = span.first;
    for (int size : span.subpath_sizes) {
      for (int l = 0; l < size; ++l) {
        const int i = base + l;
        const int j = base + (l + 1) % size;
        if (i == j) continue;
        const double d = (geom.rest.col(i) - geom.rest.col(j)).norm() / sigma;
        adj.pairs.push_back({i, j});
        adj.weights.push_back(std::exp(-d * d));
      }
      base += size;
    }
  }
  return adj;
}

SmoothJointSet build_smooth_joints(const CanonicalGeometry& geom, double max_turn_degrees) {
  SmoothJointSet set;
  const double cos_limit = std::cos(max_turn_degrees * 3.14159265358979323846 / 180.0);
  for (const CanonicalGeometry::PathSpan& span : geom.paths) {
    int base = span.first;
    for (int size : span.subpath_sizes) {
      const int n = size / 3;
      for (int j = 0; j < n; ++j) {
        SmoothJoint joint;
        joint.anchor = base + 3 * j;
        joint.outgoing = base + 3 * j + 1;
        joint.incoming = base + (3 * j + size - 1) % size;
        const Point u = geom.rest.col(joint.anchor) - geom.rest.col(joint.incoming);
        const Point v = geom.rest.col(joint.outgoing) - geom.rest.col(joint.anchor);
        const double nu = u.norm();
        const double nv = v.norm();
        if (nu < 1e-8 || nv < 1e-8) continue;
        if (u.dot(v) / (nu * nv) >= cos_limit - 1e-12) set.joints.push_back(joint);
      }
      base += size;
    }
  }
  return set;
}

double mse_term(const RasterFrame& rendered, const RasterFrame& blurred_target, RasterFrame* grad) {
  if (rendered.width() != blurred_target.width() || rendered.height() != blurred_target.height())
    throw DimensionMismatch("mse: rendered frame is " + std::to_string(rendered.width()) + "x" +
                            std::to_string(rendered.height()) + ", target is " +
                            std::to_string(blurred_target.width()) + "x" + std::to_string(blurred_target.height()));
  const RasterFrame blurred = gaussian_blur(rendered);
  const double count = 3.0 * rendered.width() * rendered.height();
  double sum = 0.0;
  RasterFrame residual;
  for (int c = 0; c < 3; ++c) {
    residual.rgb[c] = blurred.rgb[c] - blurred_target.rgb[c];
    sum += residual.rgb[c].square().sum();
  }
  if (grad) {
    for (Image& r : residual.rgb) r *= 2.0 / count;
    const RasterFrame g = gaussian_blur_adjoint(residual);
    for (int c = 0; c < 3; ++c) grad->rgb[c] += g.rgb[c];
  }
  return sum / count;
}

double spatial_term(const Eigen::Matrix2Xd& offsets, const AdjacencySet& adj, Eigen::Matrix2Xd* grad) {
  double sum = 0.0;
  for (std::size_t e = 0; e < adj.pairs.size(); ++e) {
    const auto [i, j] = adj.pairs[e];
    const Point diff = offsets.col(i) - offsets.col(j);
    sum += adj.weights[e] * diff.squaredNorm();
    if (grad) {
      grad->col(i) += 2.0 * adj.weights[e] * diff;
      grad->col(j) -= 2.0 * adj.weights[e] * diff;
    }
  }
  return sum;
}

double g1_term(const Eigen::Matrix2Xd& points, const SmoothJointSet& joints, Eigen::Matrix2Xd* grad) {
  if (joints.joints.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(joints.joints.size());
  double sum = 0.0;
  for (const SmoothJoint& j : joints.joints) {
    const Point u = points.col(j.anchor) - points.col(j.incoming);
    const Point v = points.col(j.outgoing) - points.col(j.anchor);
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu < 1e-8 || nv < 1e-8) continue;
    const double cosine = u.dot(v) / (nu * nv);
    sum += 1.0 - cosine;
    if (grad) {
      const Point gu = -scale * (v / (nu * nv) - cosine * u / (nu * nu));
      const Point gv = -scale * (u / (nu * nv) - cosine * v / (nv * nv));
      grad->col(j.anchor) += gu - gv;
      grad->col(j.incoming) -= gu;
      grad->col(j.outgoing) += gv;
    }
  }
  return sum * scale;
}

double sdf_term(const Eigen::Matrix2Xd& points, const SdfMap& sdf, double tau, Eigen::Matrix2Xd* grad) {
  if (points.cols() == 0) return 0.0;
  const double scale = 1.0 / static_cast<double>(points.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const double excess = sdf.sample(points.col(i)) - tau;
    if (excess <= 0.0) continue;
    sum += excess * excess;
    if (grad) grad->col(i) += 2.0 * scale * excess * sdf.gradient(points.col(i));
  }
  return sum * scale;
}

namespace {

template <typename T>
void check_count(const std::vector<T>& a, std::size_t expected, const char* what) {
  if (a.size() != expected)
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.size()) + " entries for " +
                            std::to_string(expected) + " keyframes");
}

}  // namespace

double loss_mse(const std::vector<RasterFrame>& rendered, const std::vector<RasterFrame>& targets,
                std::vector<RasterFrame>* grads) {
  check_count(targets, rendered.size(), "loss_mse");
  if (rendered.empty()) return 0.0;
  const double k = static_cast<double>(rendered.size());
  double sum = 0.0;
  if (grads) grads->clear();
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    RasterFrame g(rendered[i].width(), rendered[i].height(), 0.0);
    sum += mse_term(rendered[i], gaussian_blur(targets[i]), grads ? &g : nullptr);
    if (grads) {
      for (Image& c : g.rgb) c /= k;
      grads->push_back(std::move(g));
    }
  }
  return sum / k;
}

double loss_spatial(const std::vector<Eigen::Matrix2Xd>& offsets, const AdjacencySet& adj,
                    std::vector<Eigen::Matrix2Xd>* grads) {
  if (offsets.empty()) return 0.0;
  const double k = static_cast<double>(offsets.size());
  double sum = 0.0;
  if (grads) grads->clear();
  for (const Eigen::Matrix2Xd& o : offsets) {
    Eigen::Matrix2Xd g = Eigen::Matrix2Xd::Zero(2, o.cols());
    sum += spatial_term(o, adj, grads ? &g : nullptr);
    if (grads) grads->push_back(g / k);
  }
  return sum / k;
}

double loss_g1(const std::vector<Eigen::Matrix2Xd>& points, const SmoothJointSet& joints,
               std::vector<Eigen::Matrix2Xd>* grads) {
  if (points.empty()) return 0.0;
  const double k = static_cast<double>(points.size());
  double sum = 0.0;
  if (grads) grads->clear();
  for (const Eigen::Matrix2Xd& p : points) {
    Eigen::Matrix2Xd g = Eigen::Matrix2Xd::Zero(2, p.cols());
    sum += g1_term(p, joints, grads ? &g : nullptr);
    if (grads) grads->push_back(g / k);
  }
  return sum / k;
}

double loss_sdf(const std::vector<Eigen::Matrix2Xd>& points, const std::vector<SdfMap>& sdf, double tau,
                std::vector<Eigen::Matrix2Xd>* grads) {
  check_count(sdf, points.size(), "loss_sdf");
  if (points.empty()) return 0.0;
  const double k = static_cast<double>(points.size());
  double sum = 0.0;
  if (grads) grads->clear();
  for (std::size_t i = 0; i < points.size(); ++i) {
    Eigen::Matrix2Xd g = Eigen::Matrix2Xd::Zero(2, points[i].cols());
    sum += sdf_term(points[i], sdf[i], tau, grads ? &g : nullptr);
    if (grads) grads->push_back(g / k);
  }
  return sum / k;
}

double total_loss(const LossParts& parts, const LossWeights& weights) {
  return weights.mse * parts.mse + weights.spatial * parts.spatial + weights.g1 * parts.g1 +
         weights.sdf * parts.sdf;
}

MotionParams combine_gradients(const MotionParams& mse, const MotionParams& spatial, const MotionParams& g1,
                               const MotionParams& sdf, const LossWeights& weights) {
  if (!mse.same_shape(spatial) || !mse.same_shape(g1) || !mse.same_shape(sdf))
    throw DimensionMismatch("combine_gradients: gradient shapes differ");
  MotionParams out = mse.zeros_like();
  out.unpack(weights.mse * mse.pack() + weights.spatial * spatial.pack() + weights.g1 * g1.pack() +
             weights.sdf * sdf.pack());
  return out;
}

std::string LossReport::to_jsonl() const {
  nlohmann::ordered_json j;
  j["iteration"] = iteration;
  j["active_keyframes"] = active_keyframes;
  j["mse"] = parts.mse;
  j["spatial"] = parts.spatial;
  j["g1"] = parts.g1;
  j["sdf"] = parts.sdf;
  j["total"] = total;
  return j.dump();
}

PreparedTarget prepare_target(const RasterFrame& frame, double white_thresh) {
  PreparedTarget t;
  t.mask = foreground_mask(frame, white_thresh);
  t.clean = clean_target(frame, t.mask);
  t.blurred = gaussian_blur(t.clean);
  t.sdf = distance_transform(t.mask);
  return t;
}

Objective::Objective(const CanonicalGeometry& geom, std::vector<PreparedTarget> targets, LossWeights weights,
                     double sdf_tau)
    : geom_(geom), targets_(std::move(targets)), weights_(weights), sdf_tau_(sdf_tau) {
  for (const PreparedTarget& t : targets_)
    if (t.clean.width() != geom_.width || t.clean.height() != geom_.height)
      throw DimensionMismatch("target frame is " + std::to_string(t.clean.width()) + "x" +
                              std::to_string(t.clean.height()) + ", working canvas is " +
                              std::to_string(geom_.width) + "x" + std::to_string(geom_.height));
  adjacency_ = build_adjacency(geom_, 0.01 * geom_.width);
  joints_ = build_smooth_joints(geom_);
}

std::vector<ScenePlan> Objective::plan(const MotionParams& params, const RenderOptions& options) const {
  std::vector<ScenePlan> plans;
  for (int k = 0; k < params.keyframes(); ++k) {
    const Eigen::Matrix2Xd points = deform_keyframe(geom_, params, k, ProjectionGuard::Clamp);
    plans.push_back(plan_scene(scene_from_points(geom_, points), options.flatten_tolerance));
  }
  return plans;
}

Objective::KeyframeResult Objective::evaluate_keyframe(const MotionParams& params, int k,
                                                       const RenderOptions& options, bool want_grad,
                                                       const ScenePlan* plan) const {
  KeyframeResult r;
  const PreparedTarget& target = targets_.at(static_cast<std::size_t>(k));
  const Eigen::Matrix2Xd points = deform_keyframe(geom_, params, k, ProjectionGuard::Clamp);
  const Scene scene = scene_from_points(geom_, points);
  RenderTape tape;
  const RasterFrame rendered = render(scene, geom_.width, geom_.height, options, want_grad ? &tape : nullptr, plan);

  if (!want_grad) {
    r.parts.mse = mse_term(rendered, target.blurred);
    r.parts.spatial = spatial_term(params.offsets[k], adjacency_);
    r.parts.g1 = g1_term(points, joints_);
    r.parts.sdf = sdf_term(points, target.sdf, sdf_tau_);
    return r;
  }

  RasterFrame upstream(geom_.width, geom_.height, 0.0);
  r.parts.mse = mse_term(rendered, target.blurred, &upstream);
  for (Image& c : upstream.rgb) c *= weights_.mse;

  Eigen::Matrix2Xd point_grad = Eigen::Matrix2Xd::Zero(2, geom_.point_count());
  const std::vector<Eigen::Matrix2Xd> path_grads = render_backward(scene, tape, upstream);
  for (std::size_t s = 0; s < scene.paths.size(); ++s) {
    const CanonicalGeometry::PathSpan& span = geom_.paths[scene.paths[s].source];
    point_grad.middleCols(span.first, span.count) += path_grads[s];
  }
  Eigen::Matrix2Xd g1_grad = Eigen::Matrix2Xd::Zero(2, geom_.point_count());
  r.parts.g1 = g1_term(points, joints_, &g1_grad);
  Eigen::Matrix2Xd sdf_grad = Eigen::Matrix2Xd::Zero(2, geom_.point_count());
  r.parts.sdf = sdf_term(points, target.sdf, sdf_tau_, &sdf_grad);
  point_grad += weights_.g1 * g1_grad + weights_.sdf * sdf_grad;

  r.offset_grad = Eigen::Matrix2Xd::Zero(2, geom_.point_count());
  r.parts.spatial = spatial_term(params.offsets[k], adjacency_, &r.offset_grad);
  r.offset_grad *= weights_.spatial;

  r.grad = motion_backward(geom_, params, k, point_grad, ProjectionGuard::Clamp);
  return r;
}

LossParts Objective::evaluate(const MotionParams& params, const std::vector<int>& active,
                              const RenderOptions& options, MotionParams* grad,
                              const std::vector<ScenePlan>* plans, int threads) const {
  for (int k : active)
    if (k < 0 || k >= params.keyframes() || k >= static_cast<int>(targets_.size()))
      throw DimensionMismatch("active keyframe " + std::to_string(k) + " has no target");
  const bool want_grad = grad != nullptr;
  std::vector<KeyframeResult> results(active.size());
  auto work = [&](std::size_t i) {
    const int k = active[i];
    const ScenePlan* plan = plans ? &(*plans)[static_cast<std::size_t>(k)] : nullptr;
    results[i] = evaluate_keyframe(params, k, options, want_grad, plan);
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), active.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < active.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < active.size(); i += workers) work(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Reduction in keyframe order keeps the result independent of the worker count.
  LossParts parts;
  if (active.empty()) return parts;
  const double inv = 1.0 / static_cast<double>(active.size());
  if (want_grad) *grad = params.zeros_like();
  for (std::size_t i = 0; i < active.size(); ++i) {
    const KeyframeResult& r = results[i];
    parts.mse += r.parts.mse;
    parts.spatial += r.parts.spatial;
    parts.g1 += r.parts.g1;
    parts.sdf += r.parts.sdf;
    if (want_grad) {
      const int k = active[i];
      grad->homographies[k] += inv * r.grad.homographies;
      grad->offsets[k] += inv * (r.grad.offsets + r.offset_grad);
      grad->centers += inv * r.grad.centers;
    }
  }
  parts.mse *= inv;
  parts.spatial *= inv;
  parts.g1 *= inv;
  parts.sdf *= inv;
  return parts;
}

}  // namespace vecfit
