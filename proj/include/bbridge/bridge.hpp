#pragma once

// Closed-form Brownian-bridge quantities for a bridge with constant
// diffusion coefficient s pinned at x0 (t = 0) and x1 (t = 1).

#include <cmath>
#include <stdexcept>
#include <string>

#include "bbridge/numerics.hpp"

namespace bbridge {

/// Training-time t is drawn from U(0, 1 - kDefaultTimeClamp).
inline constexpr double kDefaultTimeClamp = 1e-5;

struct EndpointPair {
  Tensor x0;
  Tensor x1;

  EndpointPair() = default;
  EndpointPair(Tensor source, Tensor target) : x0(std::move(source)), x1(std::move(target)) {
    require_same_shape(x0, x1, "EndpointPair");
  }

  Index dim() const { return x0.size(); }
  double distance_squared() const { return compensated_squared_norm(x1.vec() - x0.vec()); }
};

class NoiseScale {
 public:
  constexpr NoiseScale() = default;
  explicit NoiseScale(double s) : s_(s) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::domain_error("noise scale must be finite and >= 0");
  }
  double value() const { return s_; }
  double squared() const { return s_ * s_; }

 private:
  double s_ = 1.0;
};

struct BridgeSample {
  double t = 0;
  Tensor epsilon;
  Tensor state;
};

namespace detail {
inline void require_time(double t, double lo, double hi, bool hi_open, const char* what) {
  const bool ok = t >= lo && (hi_open ? t < hi : t <= hi);
  if (!ok) {
    throw std::domain_error(std::string(what) + ": t=" + std::to_string(t) + " outside [" + std::to_string(lo) +
                            ", " + std::to_string(hi) + (hi_open ? ")" : "]"));
  }
}
}  // namespace detail

/// (1 - t) x0 + t x1.
inline Tensor interpolate(const EndpointPair& pair, double t) {
  detail::require_time(t, 0.0, 1.0, false, "interpolate");
  return pair.x0.with_values((1.0 - t) * pair.x0.vec() + t * pair.x1.vec());
}

/// Bridge standard deviation s * sqrt(t (1 - t)) at time t.
inline double bridge_stddev(double t, NoiseScale s) { return s.value() * std::sqrt(t * (1.0 - t)); }

inline BridgeSample sample_state(const EndpointPair& pair, double t, const Tensor& eps, NoiseScale s) {
  detail::require_time(t, 0.0, 1.0, true, "sample_state");
  require_same_shape(eps, pair.x0, "sample_state");
  BridgeSample out;
  out.t = t;
  out.epsilon = eps;
  out.state = pair.x0.with_values((1.0 - t) * pair.x0.vec() + t * pair.x1.vec() + bridge_stddev(t, s) * eps.vec());
  return out;
}

/// Conditional drift (x1 - x_t) / (1 - t). Rejects t > 1 - t_clamp.
inline Tensor velocity_target(const EndpointPair& pair, const BridgeSample& sample,
                              double t_clamp = kDefaultTimeClamp) {
  if (!(sample.t >= 0.0) || sample.t > 1.0 - t_clamp) {
    throw std::domain_error("velocity_target: t=" + std::to_string(sample.t) + " beyond clamp 1-" +
                            std::to_string(t_clamp));
  }
  require_same_shape(sample.state, pair.x1, "velocity_target");
  return pair.x1.with_values((pair.x1.vec() - sample.state.vec()) / (1.0 - sample.t));
}

/// Same quantity through the noise expansion (x1 - x0) - s sqrt(t / (1 - t)) eps.
inline Tensor velocity_target_expanded(const EndpointPair& pair, const BridgeSample& sample, NoiseScale s) {
  const double c = s.value() * std::sqrt(sample.t / (1.0 - sample.t));
  return pair.x1.with_values(pair.x1.vec() - pair.x0.vec() - c * sample.epsilon.vec());
}

inline Tensor displacement_target(const EndpointPair& pair, const BridgeSample& sample) {
  require_same_shape(sample.state, pair.x1, "displacement_target");
  return pair.x1.with_values(pair.x1.vec() - sample.state.vec());
}

/// Per-coordinate variance of x_t given the endpoints.
inline double marginal_variance(double t, NoiseScale s) {
  detail::require_time(t, 0.0, 1.0, false, "marginal_variance");
  return s.squared() * t * (1.0 - t);
}

/// Per-coordinate Var(x_{t2} | x_{t1}) = s^2 (t2 - t1)(1 - t2)/(1 - t1).
inline double conditional_variance(double t1, double t2, NoiseScale s) {
  if (t1 > t2) throw std::domain_error("conditional_variance: t1 > t2");
  detail::require_time(t1, 0.0, 1.0, true, "conditional_variance");
  detail::require_time(t2, 0.0, 1.0, false, "conditional_variance");
  return s.squared() * (t2 - t1) * (1.0 - t2) / (1.0 - t1);
}

/// Mean of x_{t2} given x_{t1} = state on the bridge toward x1.
inline Tensor conditional_mean(const Tensor& state, const Tensor& x1, double t1, double t2) {
  require_same_shape(state, x1, "conditional_mean");
  const double w = (t2 - t1) / (1.0 - t1);
  return state.with_values(state.vec() + w * (x1.vec() - state.vec()));
}

/// Draws (x_{t1}, x_{t2}) jointly: x_{t1} from the marginal, then x_{t2} from
/// the conditional Gaussian given x_{t1}.
struct TwoTimeDraw {
  Tensor first;
  Tensor second;
};

inline TwoTimeDraw sample_two_times(const EndpointPair& pair, double t1, double t2, NoiseScale s, RngStream& rng) {
  const Shape& shape = pair.x0.shape();
  const BridgeSample a = sample_state(pair, t1, gaussian(rng, shape), s);
  const Tensor mean = conditional_mean(a.state, pair.x1, t1, t2);
  const double sd = std::sqrt(conditional_variance(t1, t2, s));
  const Tensor z = gaussian(rng, shape);
  return {a.state, mean.with_values(mean.vec() + sd * z.vec())};
}

}  // namespace bbridge
