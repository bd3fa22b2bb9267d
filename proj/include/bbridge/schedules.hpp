#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bbridge {

/// Discretization 0 = t_0 < t_1 < ... < t_N = 1.
class Schedule {
 public:
  std::size_t steps() const { return points_.size() - 1; }
  double gamma() const { return gamma_; }
  std::span<const double> points() const { return points_; }
  double operator[](std::size_t i) const { return points_[i]; }
  double step_size(std::size_t k) const { return points_[k + 1] - points_[k]; }

  friend Schedule uniform_schedule(std::size_t steps);
  friend Schedule shifted_schedule(std::size_t steps, double gamma);

 private:
  Schedule(std::vector<double> points, double gamma) : points_(std::move(points)), gamma_(gamma) {}

  std::vector<double> points_;
  double gamma_ = 1.0;
};

/// t_i = i / N.
Schedule uniform_schedule(std::size_t steps);

/// t_i = i / (gamma N - (gamma - 1) i); steps concentrate near t = 0 as gamma grows.
/// gamma = 1 reproduces uniform_schedule bit for bit.
Schedule shifted_schedule(std::size_t steps, double gamma);

}  // namespace bbridge
