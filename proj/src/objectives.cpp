#include "bbridge/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bbridge {

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::displacement:
      return "displacement";
    case ObjectiveKind::velocity:
      return "velocity";
    case ObjectiveKind::stabilized_velocity:
      return "stabilized_velocity";
  }
  return "unknown";
}

ObjectiveKind parse_objective(std::string_view name) {
  if (name == "displacement") return ObjectiveKind::displacement;
  if (name == "velocity") return ObjectiveKind::velocity;
  if (name == "stabilized_velocity" || name == "stabilized") return ObjectiveKind::stabilized_velocity;
  throw std::invalid_argument("unknown objective '" + std::string(name) + "'");
}

double NormalizationFactor::alpha() const { return std::sqrt(alpha_squared); }

double alpha_squared(double distance_squared, Index dim, double t, NoiseScale s) {
  const double floor = kDistanceFloorPerDim * static_cast<double>(dim);
  return 1.0 + s.squared() * t * static_cast<double>(dim) / ((1.0 - t) * std::max(distance_squared, floor));
}

NormalizationFactor alpha_factor(const EndpointPair& pair, double t, NoiseScale s, double t_clamp) {
  if (!(t >= 0.0) || t > 1.0 - t_clamp) {
    throw std::domain_error("alpha_factor: t=" + std::to_string(t) + " beyond clamp");
  }
  return {alpha_squared(pair.distance_squared(), pair.dim(), t, s)};
}

Tensor stabilized_target(const EndpointPair& pair, const BridgeSample& sample, NoiseScale s, double t_clamp) {
  Tensor u = velocity_target(pair, sample, t_clamp);
  u.vec() /= alpha_factor(pair, sample.t, s, t_clamp).alpha();
  return u;
}

WeightedTarget regression_target(ObjectiveKind kind, const EndpointPair& pair, const BridgeSample& sample,
                                 NoiseScale s, double t_clamp) {
  switch (kind) {
    case ObjectiveKind::displacement:
      return {displacement_target(pair, sample), 1.0};
    case ObjectiveKind::velocity:
      return {velocity_target(pair, sample, t_clamp), 1.0};
    case ObjectiveKind::stabilized_velocity:
      return {velocity_target(pair, sample, t_clamp), 1.0 / alpha_factor(pair, sample.t, s, t_clamp).alpha_squared};
  }
  throw std::invalid_argument("regression_target: bad objective");
}

double loss(const WeightedTarget& target, const Tensor& prediction) {
  require_same_shape(prediction, target.target, "loss");
  return target.weight * compensated_squared_norm(prediction.vec() - target.target.vec());
}

Tensor loss_gradient(const WeightedTarget& target, const Tensor& prediction) {
  require_same_shape(prediction, target.target, "loss_gradient");
  return prediction.with_values(2.0 * target.weight * (prediction.vec() - target.target.vec()));
}

double loss(ObjectiveKind kind, const Tensor& prediction, const EndpointPair& pair, const BridgeSample& sample,
            NoiseScale s, double t_clamp) {
  require_same_shape(prediction, pair.x0, "loss");
  return loss(regression_target(kind, pair, sample, s, t_clamp), prediction);
}

Tensor loss_gradient(ObjectiveKind kind, const Tensor& prediction, const EndpointPair& pair,
                     const BridgeSample& sample, NoiseScale s, double t_clamp) {
  require_same_shape(prediction, pair.x0, "loss_gradient");
  return loss_gradient(regression_target(kind, pair, sample, s, t_clamp), prediction);
}

double expected_target_sqnorm(ObjectiveKind kind, double distance_squared, Index dim, double t, NoiseScale s) {
  const double noise = s.squared() * static_cast<double>(dim);
  switch (kind) {
    case ObjectiveKind::displacement:
      // x1 - x_t = (1-t)(x1-x0) - s sqrt(t(1-t)) eps
      return (1.0 - t) * (1.0 - t) * distance_squared + noise * t * (1.0 - t);
    case ObjectiveKind::velocity:
      return distance_squared + noise * t / (1.0 - t);
    case ObjectiveKind::stabilized_velocity:
      return (distance_squared + noise * t / (1.0 - t)) / alpha_squared(distance_squared, dim, t, s);
  }
  throw std::invalid_argument("expected_target_sqnorm: bad objective");
}

namespace {

Tensor profile_target(ObjectiveKind kind, const EndpointPair& pair, const BridgeSample& sample, NoiseScale s) {
  switch (kind) {
    case ObjectiveKind::displacement:
      return displacement_target(pair, sample);
    case ObjectiveKind::velocity:
      return velocity_target(pair, sample);
    case ObjectiveKind::stabilized_velocity:
      return stabilized_target(pair, sample, s);
  }
  throw std::invalid_argument("profile_target: bad objective");
}

}  // namespace

RunningMoments sampled_target_sqnorm(ObjectiveKind kind, const EndpointPair& pair, double t, NoiseScale s,
                                     std::size_t samples, RngStream rng) {
  RunningMoments m;
  Tensor eps(pair.x0.shape());
  for (std::size_t i = 0; i < samples; ++i) {
    fill_gaussian(rng, eps.vec());
    const BridgeSample sample = sample_state(pair, t, eps, s);
    m.add(squared_norm(profile_target(kind, pair, sample, s)));
  }
  return m;
}

std::vector<ProfilePoint> target_profile(ObjectiveKind kind, const EndpointPair& pair, NoiseScale s,
                                         const std::vector<double>& t_grid, ProfileMethod method,
                                         std::size_t mc_samples, std::optional<RngStream> rng) {
  if (t_grid.empty()) throw std::invalid_argument("target_profile: empty grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0.0 || t_grid[i] > kProfileUpperLimit) {
      throw std::domain_error("target_profile: grid point outside [0, 0.999]");
    }
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw std::invalid_argument("target_profile: grid not increasing");
  }
  if (method == ProfileMethod::monte_carlo && (mc_samples == 0 || !rng)) {
    throw std::invalid_argument("target_profile: Monte-Carlo needs samples and an rng");
  }

  // Integration nodes: grid plus the 0 and 0.999 anchors when absent.
  std::vector<double> nodes;
  if (t_grid.front() > 0.0) nodes.push_back(0.0);
  const std::size_t offset = nodes.size();
  nodes.insert(nodes.end(), t_grid.begin(), t_grid.end());
  if (t_grid.back() < kProfileUpperLimit) nodes.push_back(kProfileUpperLimit);

  const double dist2 = pair.distance_squared();
  std::vector<double> S(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (method == ProfileMethod::closed_form) {
      S[i] = expected_target_sqnorm(kind, dist2, pair.dim(), nodes[i], s);
    } else {
      S[i] = sampled_target_sqnorm(kind, pair, nodes[i], s, mc_samples, rng->derive(i)).mean();
    }
  }

  std::vector<double> cumulative(nodes.size(), 0.0);
  CompensatedSum<double> acc;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    acc += 0.5 * (S[i] + S[i - 1]) * (nodes[i] - nodes[i - 1]);
    cumulative[i] = acc.value();
  }
  const double total = cumulative.back();

  std::vector<ProfilePoint> out;
  out.reserve(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const std::size_t j = i + offset;
    out.push_back({nodes[j], S[j], total > 0.0 ? cumulative[j] / total : 0.0});
  }
  return out;
}

std::vector<double> linear_grid(double step, double upto) {
  if (!(step > 0.0)) throw std::invalid_argument("linear_grid: step must be positive");
  const auto n = static_cast<std::size_t>(std::floor(upto / step + 1e-9));
  std::vector<double> grid(n + 1);
  for (std::size_t i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) * step;
  if (std::abs(grid.back() - upto) < 1e-9 * std::max(1.0, upto)) grid.back() = upto;
  return grid;
}

}  // namespace bbridge
