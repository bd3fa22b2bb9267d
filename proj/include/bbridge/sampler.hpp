#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bbridge/bridge.hpp"
#include "bbridge/schedules.hpp"

namespace bbridge {

/// v(state, t, context) -> velocity with the shape of `state`. `context` may be null.
using VelocityField = std::function<Tensor(const Tensor& state, double t, const Tensor* context)>;

/// The analytic conditional drift (x1 - x) / (1 - t) toward a known target.
VelocityField oracle_field(Tensor x1);

/// v == 0 everywhere.
VelocityField zero_field();

enum class SamplerMode { standard, corrected };

std::string_view to_string(SamplerMode mode);
SamplerMode parse_sampler_mode(std::string_view name);

struct SamplerStep {
  std::size_t k = 0;
  double t_from = 0;
  double t_to = 0;
  double dt = 0;
  double eta = 0;
};

/// Step k of `schedule`. Corrected: eta = s sqrt(dt (1 - t_{k+1}) / (1 - t_k)),
/// which vanishes on the final step. Standard: eta = s sqrt(dt).
SamplerStep make_step(SamplerMode mode, const Schedule& schedule, std::size_t k, NoiseScale s);

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(std::size_t step, const std::string& what)
      : std::runtime_error("integration failed at step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// state + dt * field(state, t_k) + eta * eps.
Tensor step(const Tensor& state, const VelocityField& field, const SamplerStep& s, const Tensor& eps,
            const Tensor* context = nullptr);

/// Full trajectory x_0, ..., x_N from `x0`. Noise for step k is drawn from
/// `rng` in step order; a step with eta = 0 draws nothing.
std::vector<Tensor> sample(SamplerMode mode, const Tensor& x0, const VelocityField& field, const Schedule& schedule,
                           NoiseScale s, RngStream& rng, const Tensor* context = nullptr);

/// Final state only; consumes the rng exactly as sample() does.
Tensor sample_final(SamplerMode mode, const Tensor& x0, const VelocityField& field, const Schedule& schedule,
                    NoiseScale s, RngStream& rng, const Tensor* context = nullptr);

struct EndpointStatistics {
  double mean_error = 0;  // coordinate-averaged bias of the endpoint mean vs x1
  double mse = 0;         // E ||x_hat - x1||^2 / D
  double variance = 0;    // coordinate-averaged unbiased endpoint variance
  std::size_t runs = 0;
};

/// Repeats sample_final from pair.x0 `runs` times, run r on rng.derive(r).
EndpointStatistics endpoint_statistics(SamplerMode mode, const VelocityField& field, const EndpointPair& pair,
                                       const Schedule& schedule, NoiseScale s, std::size_t runs,
                                       const RngStream& rng);

}  // namespace bbridge
