#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bbridge/objectives.hpp"
#include "bbridge/sampler.hpp"
#include "bbridge/velocity_model.hpp"

namespace bbridge {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct TrainConfig {
  ObjectiveKind objective = ObjectiveKind::stabilized_velocity;
  NoiseScale s{1.0};
  std::size_t steps = 2000;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double t_clamp = kDefaultTimeClamp;
  std::uint64_t seed = 0;
  std::size_t log_every = 10;
  /// Keep one SampleRecord per training sample (debug output).
  bool record_samples = false;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);

/// Endpoint pairs plus optional per-pair conditioning (empty when unused).
struct PairBatch {
  std::vector<EndpointPair> pairs;
  std::vector<Tensor> contexts;

  std::size_t size() const { return pairs.size(); }
  const Tensor* context(std::size_t i) const { return contexts.empty() ? nullptr : &contexts[i]; }
};

/// Pull-based data source.
class DatasetProvider {
 public:
  virtual ~DatasetProvider() = default;
  virtual PairBatch next_batch(RngStream& rng, std::size_t count) = 0;
};

struct OptimizerState {
  Vector<double> first_moment;
  Vector<double> second_moment;
  std::size_t updates = 0;
};

struct ModelState {
  ModelConfig config;
  Parameters params;
  OptimizerState optimizer;
};

ModelState make_model_state(const ModelConfig& config, RngStream& init_rng);

/// Applies one SGD or Adam update in place.
void apply_update(ModelState& state, const Vector<double>& gradient, const TrainConfig& config);

struct SampleRecord {
  std::size_t step = 0;
  std::size_t index = 0;
  double t = 0;
  double alpha_squared = 1;
  double target_sqnorm = 0;
};

struct StepStats {
  std::size_t step = 0;
  double loss = 0;               // batch mean
  double max_target_sqnorm = 0;  // max ||regression target||^2 over the batch
  double grad_norm = 0;
  std::vector<SampleRecord> samples;
};

/// Sees every constructed training sample; used by tests to audit the loop.
using SampleObserver =
    std::function<void(const EndpointPair&, const BridgeSample&, const WeightedTarget&, const Tensor& prediction)>;

class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t step, ObjectiveKind kind, const std::string& what)
      : std::runtime_error("training failed at step " + std::to_string(step) + " (" + std::string(to_string(kind)) +
                           "): " + what),
        step_(step),
        kind_(kind) {}
  std::size_t step() const { return step_; }
  ObjectiveKind objective() const { return kind_; }

 private:
  std::size_t step_;
  ObjectiveKind kind_;
};

/// Per sample: t ~ U(0, 1 - t_clamp] and eps ~ N(0, I) from rng.derive(i),
/// x_t on the bridge, objective target and weight, model prediction; then
/// the batch-mean loss gradient is backpropagated and the optimizer steps.
StepStats train_step(ModelState& state, const PairBatch& batch, const TrainConfig& config, const RngStream& rng,
                     std::size_t step_index = 0, const SampleObserver& observer = {});

struct LogEntry {
  std::size_t step = 0;          // 1-based count of completed steps
  double loss = 0;               // mean batch loss over the logging window
  double max_target_sqnorm = 0;  // max over the logging window
  double grad_norm = 0;          // at the logged step
  double ms = 0;                 // wall time since training start
};

struct TrainStats {
  std::vector<LogEntry> log;
  std::vector<double> step_losses;
  double max_target_sqnorm = 0;
  /// FNV-1a digest of every (x0, x1, t, eps) consumed, in order.
  std::uint64_t stream_digest = 0;
  std::vector<SampleRecord> samples;
  std::optional<std::size_t> failed_step;
};

struct TrainResult {
  ModelState model;
  TrainStats stats;
};

/// Thrown by train(); carries statistics up to the failing step.
class TrainingAborted : public TrainingError {
 public:
  TrainingAborted(const TrainingError& cause, TrainStats stats)
      : TrainingError(cause.step(), cause.objective(), "aborted"), cause_(cause.what()), stats_(std::move(stats)) {}
  const std::string& cause() const { return cause_; }
  const TrainStats& stats() const { return stats_; }

 private:
  std::string cause_;
  TrainStats stats_;
};

/// Runs config.steps steps. Step k draws its batch from
/// RngStream(seed, kDataStream).derive(k) and its (t, eps) from
/// RngStream(seed, kNoiseStream).derive(k), so every objective sees the same
/// stream for a given seed. `checkpoint` (if set) is called after each step.
TrainResult train(ModelState model, DatasetProvider& data, const TrainConfig& config,
                  const std::function<void(std::size_t step, const ModelState&)>& checkpoint = {});

inline constexpr std::uint64_t kDataStream = 0x7261696e64617461ULL;
inline constexpr std::uint64_t kNoiseStream = 0x7261696e6e6f6973ULL;

/// The network's raw output interpreted as a velocity field. Displacement
/// models predict x1 - x_t, which becomes a velocity after division by 1 - t.
VelocityField model_field(const ModelState& model, ObjectiveKind objective);
VelocityField model_field(ModelConfig config, Parameters params, ObjectiveKind objective);

/// Mean objective loss of `model` on a frozen set of training samples.
double evaluation_loss(const ModelState& model, const PairBatch& batch, const TrainConfig& config,
                       const RngStream& rng);

}  // namespace bbridge
