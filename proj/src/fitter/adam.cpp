#include "vecfit/error.hpp"
#include "vecfit/fitter.hpp"

#include <cmath>

namespace vecfit {

AdamState AdamState::zeros_like(const MotionParams& params) {
  AdamState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  s.keyframe_steps.assign(static_cast<std::size_t>(params.keyframes()), 0);
  return s;
}

void AdamState::reset_keyframe(int k) {
  m.homographies[k].setZero();
  v.homographies[k].setZero();
  m.offsets[k].setZero();
  v.offsets[k].setZero();
  keyframe_steps[k] = 0;
}

namespace {

template <typename Derived>
void check_finite(const Eigen::MatrixBase<Derived>& g, const std::string& what) {
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      if (!std::isfinite(g(r, c)))
        throw NonFiniteGradient("non-finite gradient in " + what + " at (" + std::to_string(r) + ", " +
                                std::to_string(c) + ")");
}

template <typename P, typename G, typename M>
void update(P& param, const G& grad, M& m, M& v, double lr, int step, const AdamSettings& s) {
  m = s.beta1 * m + (1.0 - s.beta1) * grad;
  v = s.beta2 * v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(s.beta1, step);
  const double c2 = 1.0 - std::pow(s.beta2, step);
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + s.eps);
}

}  // namespace

void adam_step(MotionParams& params, const MotionParams& grads, AdamState& state, const AdamSettings& settings,
               const std::vector<int>& active) {
  if (!params.same_shape(grads) || !params.same_shape(state.m))
    throw DimensionMismatch("adam_step: parameter, gradient and moment shapes differ");
  bool any = false;
  for (int k : active) {
    if (k <= 0) continue;
    check_finite(grads.homographies[k], "keyframe " + std::to_string(k) + " homographies");
    check_finite(grads.offsets[k], "keyframe " + std::to_string(k) + " offsets");
    any = true;
  }
  if (!any) return;
  check_finite(grads.centers, "group centers");

  for (int k : active) {
    if (k <= 0) continue;
    const int step = ++state.keyframe_steps[k];
    Eigen::Matrix<double, 8, 1> lr = Eigen::Matrix<double, 8, 1>::Constant(settings.lr_homography);
    lr[kP1] *= settings.perspective_scale;
    lr[kP2] *= settings.perspective_scale;
    auto& h = params.homographies[k];
    auto& mh = state.m.homographies[k];
    auto& vh = state.v.homographies[k];
    const auto& gh = grads.homographies[k];
    mh = settings.beta1 * mh + (1.0 - settings.beta1) * gh;
    vh = settings.beta2 * vh + (1.0 - settings.beta2) * gh.cwiseProduct(gh);
    const double c1 = 1.0 - std::pow(settings.beta1, step);
    const double c2 = 1.0 - std::pow(settings.beta2, step);
    h.array() -= (lr.replicate(1, h.cols()).array() * (mh.array() / c1)) / ((vh.array() / c2).sqrt() + settings.eps);
    update(params.offsets[k], grads.offsets[k], state.m.offsets[k], state.v.offsets[k], settings.lr_offsets, step,
           settings);
  }
  const int step = ++state.center_steps;
  update(params.centers, grads.centers, state.m.centers, state.v.centers, settings.lr_homography, step, settings);
}

}  // namespace vecfit
