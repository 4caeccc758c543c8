#include "vecfit/error.hpp"
#include "vecfit/fitter.hpp"

#include <cmath>

namespace vecfit {

Schedule progressive_schedule(const FitConfig& config) {
  Schedule s;
  s.iterations = config.iterations;
  s.keyframes = config.keyframes;
  if (config.keyframes < 1) throw ConfigError("config field 'keyframes' must be at least 1");
  if (config.activation_cadence < 1) throw ConfigError("config field 'activation_cadence' must be positive");
  if (config.iterations > 0 &&
      static_cast<long long>(config.keyframes) * config.activation_cadence > config.iterations)
    throw ConfigError("config field 'iterations' (" + std::to_string(config.iterations) + ") cannot activate " +
                      std::to_string(config.keyframes) + " keyframes every " +
                      std::to_string(config.activation_cadence) + " iterations");
  for (int k = 1; k < config.keyframes; ++k) s.activations.push_back({(k - 1) * config.activation_cadence, k});
  const int last = s.activations.empty() ? 0 : s.activations.back().iteration;
  s.refinement_iterations = std::max(0, config.iterations - last);
  const int sharpen = static_cast<int>(std::lround(config.sharpen_fraction * config.iterations));
  s.sharpen_start = config.iterations - sharpen;
  return s;
}

std::vector<int> Schedule::active_at(int iteration) const {
  std::vector<int> active{0};
  for (const ActivationEvent& e : activations)
    if (e.iteration <= iteration) active.push_back(e.keyframe);
  return active;
}

void activate_keyframe(MotionParams& params, int k_new) {
  if (k_new < 1 || k_new >= params.keyframes())
    throw DimensionMismatch("cannot activate keyframe " + std::to_string(k_new));
  params.homographies[k_new] = params.homographies[k_new - 1];
  params.offsets[k_new] = params.offsets[k_new - 1];
}

std::vector<int> select_keyframes(int frame_count, int keyframes) {
  if (keyframes < 1) throw ConfigError("config field 'keyframes' must be at least 1");
  if (frame_count < keyframes)
    throw ConfigError("config field 'keyframes' (" + std::to_string(keyframes) + ") exceeds the " +
                      std::to_string(frame_count) + " available frames");
  std::vector<int> indices;
  for (int k = 0; k < keyframes; ++k)
    indices.push_back(keyframes == 1 ? 0
                                     : static_cast<int>(std::lround(static_cast<double>(k) * (frame_count - 1) /
                                                                    (keyframes - 1))));
  return indices;
}

}  // namespace vecfit
