#pragma once

// Synthetic paired translation tasks and the metrics used to score a trained
// bridge on them.

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bbridge/sampler.hpp"
#include "bbridge/trainer.hpp"

namespace bbridge {

enum class TaskKind { gaussian_shift, moons_rotate, grid_colorize, signal_refine };

std::string_view to_string(TaskKind kind);
TaskKind parse_task(std::string_view name);

struct TaskSpec {
  TaskKind kind = TaskKind::gaussian_shift;
  /// gaussian_shift: dimension; signal_refine: signal length; derived for the others.
  Index dim = 2;
  /// gaussian_shift: x1 = x0 + shift (length dim).
  std::vector<double> shift{2.0, 0.0};
  /// moons_rotate: each pair is rotated by one of these angles (radians),
  /// which is also supplied as the pair's context.
  std::vector<double> angles{1.5707963267948966, -1.5707963267948966};
  double moon_noise = 0.05;
  /// grid_colorize: side length of the g x g x 3 grid (1..8).
  Index grid = 4;
  /// signal_refine: every k-th sample is kept and repeated k times.
  Index repeat = 4;

  /// Dimension of x0/x1.
  Index data_dim() const;
  /// Context width (1 for moons_rotate, 0 otherwise).
  Index context_dim() const;
  void validate() const;

  static TaskSpec gaussian_shift(std::vector<double> shift);
  static TaskSpec moons_rotate(std::vector<double> angles);
  static TaskSpec grid_colorize(Index grid);
  static TaskSpec signal_refine(Index length, Index repeat);
};

nlohmann::json to_json(const TaskSpec& spec);
TaskSpec task_spec_from_json(const nlohmann::json& j);

/// i.i.d. pairs; pair i uses rng.derive(i), so the result is a pure function
/// of (spec, count, rng).
PairBatch generate_pairs(const TaskSpec& spec, std::size_t count, const RngStream& rng);

class TaskProvider final : public DatasetProvider {
 public:
  explicit TaskProvider(TaskSpec spec) : spec_(std::move(spec)) {}
  PairBatch next_batch(RngStream& rng, std::size_t count) override;
  const TaskSpec& spec() const { return spec_; }

 private:
  TaskSpec spec_;
};

/// Columns of a D x n matrix.
Matrix stack_columns(const std::vector<Tensor>& xs);

/// V-statistic energy distance between the column sets A and B:
/// 2 E||a - b|| - E||a - a'|| - E||b - b'|| with all index pairs included.
/// Zero when A and B are the same set.
double energy_distance(const Matrix& a, const Matrix& b);

struct EvalReport {
  double paired_mse = 0;                // mean ||x1_hat - x1||^2
  double energy_distance = 0;           // ED(generated, targets)
  double source_energy_distance = 0;    // ED(sources, targets), the untrained baseline
  double mean_displacement_error = 0;   // ||mean(x1_hat - x0) - mean(x1 - x0)||
  std::size_t samples = 0;
};

nlohmann::json to_json(const EvalReport& report);

/// Everything evaluate() produced, for export.
struct Evaluation {
  EvalReport report;
  PairBatch pairs;
  std::vector<Tensor> endpoints;
};

/// Draws `runs` fresh pairs from rng.derive(0), integrates each source with
/// rng.derive(1).derive(r) and scores the endpoints against the paired targets.
Evaluation evaluate(const VelocityField& field, const TaskSpec& spec, const Schedule& schedule, SamplerMode mode,
                    NoiseScale s, std::size_t runs, const RngStream& rng);

/// Per-pair field, e.g. oracle_field(pair.x1).
using FieldFactory = std::function<VelocityField(const EndpointPair&)>;

Evaluation evaluate_per_pair(const FieldFactory& make_field, const TaskSpec& spec, const Schedule& schedule,
                             SamplerMode mode, NoiseScale s, std::size_t runs, const RngStream& rng);

/// Report for endpoints produced elsewhere.
EvalReport score_endpoints(const PairBatch& pairs, const std::vector<Tensor>& endpoints);

/// CSV with columns x0_0.., x1_0..
std::string pairs_csv(const PairBatch& pairs);
/// CSV with columns run, x0_*, x1_*, x1hat_*.
std::string endpoints_csv(const PairBatch& pairs, const std::vector<Tensor>& endpoints);

}  // namespace bbridge
