#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bbridge/bridge.hpp"

namespace bbridge {

enum class ObjectiveKind { displacement, velocity, stabilized_velocity };

std::string_view to_string(ObjectiveKind kind);
/// Accepts "displacement", "velocity", "stabilized_velocity" and the short form "stabilized".
ObjectiveKind parse_objective(std::string_view name);

/// ||x1 - x0||^2 is floored at this multiple of D before dividing.
inline constexpr double kDistanceFloorPerDim = 1e-8;

struct NormalizationFactor {
  double alpha_squared = 1.0;
  double alpha() const;
};

/// alpha^2 = 1 + s^2 t D / ((1 - t) max(||x1 - x0||^2, 1e-8 D)).
NormalizationFactor alpha_factor(const EndpointPair& pair, double t, NoiseScale s,
                                 double t_clamp = kDefaultTimeClamp);

/// Same law from precomputed scalars; used by closed-form profiles.
double alpha_squared(double distance_squared, Index dim, double t, NoiseScale s);

Tensor stabilized_target(const EndpointPair& pair, const BridgeSample& sample, NoiseScale s,
                         double t_clamp = kDefaultTimeClamp);

/// Regression target for `kind` and the weight applied to the squared
/// residual (1/alpha^2 for the stabilized objective, 1 otherwise). The
/// network regresses raw velocity for both velocity objectives.
struct WeightedTarget {
  Tensor target;
  double weight = 1.0;
};

WeightedTarget regression_target(ObjectiveKind kind, const EndpointPair& pair, const BridgeSample& sample,
                                 NoiseScale s, double t_clamp = kDefaultTimeClamp);

double loss(ObjectiveKind kind, const Tensor& prediction, const EndpointPair& pair, const BridgeSample& sample,
            NoiseScale s, double t_clamp = kDefaultTimeClamp);

/// d loss / d prediction = 2 w (prediction - target).
Tensor loss_gradient(ObjectiveKind kind, const Tensor& prediction, const EndpointPair& pair,
                     const BridgeSample& sample, NoiseScale s, double t_clamp = kDefaultTimeClamp);

double loss(const WeightedTarget& target, const Tensor& prediction);
Tensor loss_gradient(const WeightedTarget& target, const Tensor& prediction);

// ---------------------------------------------------------------------------
// Loss-contribution profiles S(t) = E||target_t||^2 and their normalized
// cumulative integral C(t) = int_0^t S / int_0^0.999 S.

inline constexpr double kProfileUpperLimit = 0.999;

struct ProfilePoint {
  double t = 0;
  double S = 0;
  double C = 0;
};

enum class ProfileMethod { closed_form, monte_carlo };

/// Closed-form S(t) for the given kind.
double expected_target_sqnorm(ObjectiveKind kind, double distance_squared, Index dim, double t, NoiseScale s);

/// Monte-Carlo S(t) over `samples` noise draws with the pair fixed.
RunningMoments sampled_target_sqnorm(ObjectiveKind kind, const EndpointPair& pair, double t, NoiseScale s,
                                     std::size_t samples, RngStream rng);

/// Profile over a strictly increasing grid in [0, 0.999]. Cumulative values
/// use the trapezoid rule on the grid extended by t = 0 and t = 0.999.
/// Monte-Carlo points use rng.derive(i) for grid index i, so results do not
/// depend on evaluation order.
std::vector<ProfilePoint> target_profile(ObjectiveKind kind, const EndpointPair& pair, NoiseScale s,
                                         const std::vector<double>& t_grid, ProfileMethod method,
                                         std::size_t mc_samples = 0, std::optional<RngStream> rng = std::nullopt);

/// Evenly spaced grid {0, step, ..., upto} (endpoint included when it lands on a step).
std::vector<double> linear_grid(double step, double upto = kProfileUpperLimit);

}  // namespace bbridge
