#pragma once

// Statistical and analytic checks of the closed-form bridge results:
// Monte-Carlo estimates against formulas, finite differences against
// reverse mode, and the schedule contract.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bbridge/objectives.hpp"
#include "bbridge/velocity_model.hpp"

namespace bbridge {

enum class VerifySuite { bridge, sampler, objectives, schedules, all };

std::string_view to_string(VerifySuite suite);
VerifySuite parse_verify_suite(std::string_view name);

struct VerifyOptions {
  std::uint64_t seed = 7;
  /// Draws per Monte-Carlo estimate (bridge moments, variance-ratio law).
  std::size_t mc = 100000;
  /// Noise draws per grid point for the alpha-law and profile checks.
  std::size_t profile_mc = 10000;
  /// Sampler repetitions for endpoint-variance checks.
  std::size_t runs = 10000;
  double sigma_bound = 3.0;          // |mean error| <= k standard errors
  double variance_rel_tol = 0.03;    // bridge marginal / conditional variances, alpha law
  double endpoint_rel_tol = 0.05;    // standard-mode endpoint variance
  double exactness_mse = 1e-20;      // corrected sampler with the oracle field
  double profile_abs_tol = 0.02;     // C_velocity(0.9), C_displacement(0.5)
  double stabilized_profile_tol = 0.01;
  double gradient_rel_tol = 1e-6;
};

nlohmann::json to_json(const VerifyOptions& o);

struct Check {
  std::string suite;
  std::string name;
  double measured = 0;
  double bound = 0;
  bool passed = false;
};

struct VerifyReport {
  std::vector<Check> checks;
  bool passed() const;
  nlohmann::json to_json(VerifySuite suite, const VerifyOptions& options) const;
};

VerifyReport verify_bridge(const VerifyOptions& options);
VerifyReport verify_objectives(const VerifyOptions& options);
VerifyReport verify_schedules(const VerifyOptions& options);
VerifyReport verify_sampler(const VerifyOptions& options);
VerifyReport run_verify(VerifySuite suite, const VerifyOptions& options);

// Pieces reused by the acceptance and unit tests.

struct MomentCheck {
  double max_mean_z = 0;        // max over coordinates of |mean - expected| / standard error
  double max_variance_rel = 0;  // max over coordinates of |var - expected| / expected
};

/// Moments of x_t over `draws` noise samples vs interpolate(t) and s^2 t (1 - t).
MomentCheck bridge_marginal_moments(const EndpointPair& pair, double t, NoiseScale s, std::size_t draws,
                                    RngStream rng);

/// Var(x_{t2} | x_{t1}) estimated as the residual variance of regressing
/// x_{t2} on x_{t1}, with both drawn from Brownian paths B_t = W_t - t W_1
/// (independent of the closed-form conditional law).
struct ConditionalEstimate {
  double variance = 0;
  double slope = 0;  // regression slope; the bridge gives (1 - t2) / (1 - t1)
  double slope_se = 0;
};
ConditionalEstimate brownian_conditional_variance(double t1, double t2, NoiseScale s, std::size_t paths,
                                                  RngStream rng);

/// Same estimate using sample_two_times (the library's sequential sampler).
ConditionalEstimate sequential_conditional_variance(double t1, double t2, NoiseScale s, std::size_t paths,
                                                    RngStream rng);

/// Relative error ||analytic - fd|| / max(||analytic||, ||fd||) for the
/// parameter gradient of the objective loss through the model, over
/// `probes` randomly chosen parameters (central differences, step h).
double loss_gradient_fd_error(const ModelConfig& config, ObjectiveKind kind, NoiseScale s, std::size_t probes,
                              double h, RngStream rng);

}  // namespace bbridge
