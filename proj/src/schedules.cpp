#include "bbridge/schedules.hpp"

#include <cmath>
#include <stdexcept>

namespace bbridge {

Schedule uniform_schedule(std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("schedule needs at least one step");
  std::vector<double> t(steps + 1);
  const double n = static_cast<double>(steps);
  for (std::size_t i = 0; i <= steps; ++i) t[i] = static_cast<double>(i) / n;
  return Schedule(std::move(t), 1.0);
}

Schedule shifted_schedule(std::size_t steps, double gamma) {
  if (steps == 0) throw std::invalid_argument("schedule needs at least one step");
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) throw std::domain_error("shift gamma must be >= 1");
  std::vector<double> t(steps + 1);
  const double n = static_cast<double>(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double di = static_cast<double>(i);
    t[i] = di / (gamma * n - (gamma - 1.0) * di);
  }
  // The denominator equals N exactly at i = N; pin it against rounding.
  t[steps] = 1.0;
  return Schedule(std::move(t), gamma);
}

}  // namespace bbridge
