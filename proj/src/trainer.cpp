#include "bbridge/trainer.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

namespace bbridge {

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam" || name == "adaptive-moment") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(t_clamp > 0.0 && t_clamp < 0.1)) throw std::invalid_argument("t_clamp must lie in (0, 0.1)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (log_every < 1) throw std::invalid_argument("log_every must be >= 1");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"objective", std::string(to_string(c.objective))},
          {"s", c.s.value()},
          {"steps", c.steps},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"optimizer", std::string(to_string(c.optimizer))},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_epsilon", c.adam_epsilon},
          {"t_clamp", c.t_clamp},
          {"seed", c.seed},
          {"log_every", c.log_every}};
}

ModelState make_model_state(const ModelConfig& config, RngStream& init_rng) {
  ModelState s;
  s.config = config;
  s.params = init_parameters(config, init_rng);
  s.optimizer.first_moment = Vector<double>::Zero(s.params.values.size());
  s.optimizer.second_moment = Vector<double>::Zero(s.params.values.size());
  return s;
}

void apply_update(ModelState& state, const Vector<double>& g, const TrainConfig& c) {
  OptimizerState& o = state.optimizer;
  const double lr = c.learning_rate;
  ++o.updates;
  if (c.optimizer == OptimizerKind::sgd) {
    state.params.values -= lr * g;
    return;
  }
  if (o.first_moment.size() != g.size()) {
    o.first_moment = Vector<double>::Zero(g.size());
    o.second_moment = Vector<double>::Zero(g.size());
  }
  o.first_moment = c.beta1 * o.first_moment + (1.0 - c.beta1) * g;
  o.second_moment = c.beta2 * o.second_moment + (1.0 - c.beta2) * g.cwiseAbs2();
  const double k = static_cast<double>(o.updates);
  const double c1 = 1.0 - std::pow(c.beta1, k);
  const double c2 = 1.0 - std::pow(c.beta2, k);
  state.params.values.array() -=
      lr * (o.first_moment.array() / c1) / ((o.second_moment.array() / c2).sqrt() + c.adam_epsilon);
}

namespace {

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void add(double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  void add(const Tensor& t) {
    for (double v : t.values()) add(v);
  }
};

struct PreparedBatch {
  std::vector<BridgeSample> samples;
  std::vector<WeightedTarget> targets;
  Matrix states;
  Matrix context;
  std::vector<double> times;
};

PreparedBatch prepare(const ModelState& state, const PairBatch& batch, const TrainConfig& config,
                      const RngStream& rng) {
  const Index dim = state.config.input_dim;
  const auto n = static_cast<Index>(batch.size());
  PreparedBatch p;
  p.states.resize(dim, n);
  p.context.resize(state.config.context_dim, n);
  p.times.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const EndpointPair& pair = batch.pairs[i];
    if (pair.dim() != dim) throw std::invalid_argument("training pair dimension does not match model");
    RngStream sample_rng = rng.derive(i);
    const double t = sample_rng.uniform() * (1.0 - config.t_clamp);
    Tensor eps = gaussian(sample_rng, pair.x0.shape());
    BridgeSample sample = sample_state(pair, t, eps, config.s);
    p.targets.push_back(regression_target(config.objective, pair, sample, config.s, config.t_clamp));
    p.states.col(static_cast<Index>(i)) = sample.state.vec();
    p.times[i] = t;
    if (state.config.context_dim > 0) {
      const Tensor* c = batch.context(i);
      if (c != nullptr) {
        if (c->size() != state.config.context_dim) throw std::invalid_argument("context dimension mismatch");
        p.context.col(static_cast<Index>(i)) = c->vec();
      } else {
        p.context.col(static_cast<Index>(i)).setZero();
      }
    }
    p.samples.push_back(std::move(sample));
  }
  return p;
}

}  // namespace

StepStats train_step(ModelState& state, const PairBatch& batch, const TrainConfig& config, const RngStream& rng,
                     std::size_t step_index, const SampleObserver& observer) {
  if (batch.size() == 0) throw std::invalid_argument("train_step: empty batch");
  const PreparedBatch p = prepare(state, batch, config, rng);
  const Matrix pred = forward_batch(state.params, state.config, p.states, p.times, p.context);

  const auto n = static_cast<Index>(batch.size());
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix upstream(state.config.input_dim, n);
  StepStats stats;
  stats.step = step_index;
  CompensatedSum<double> total;
  for (Index i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const WeightedTarget& target = p.targets[iu];
    const Tensor prediction = target.target.with_values(pred.col(i));
    const double l = loss(target, prediction);
    total += l;
    upstream.col(i) = inv_n * loss_gradient(target, prediction).vec();
    const double target_sq = squared_norm(target.target);
    stats.max_target_sqnorm = std::max(stats.max_target_sqnorm, target_sq);
    if (config.record_samples) {
      stats.samples.push_back({step_index, iu, p.samples[iu].t, 1.0 / target.weight, target_sq});
    }
    if (observer) observer(batch.pairs[iu], p.samples[iu], target, prediction);
  }
  stats.loss = total.value() * inv_n;
  if (!std::isfinite(stats.loss)) throw TrainingError(step_index, config.objective, "non-finite loss");

  const BatchGradients g = backward_batch(state.params, state.config, p.states, p.times, p.context, upstream);
  stats.grad_norm = std::sqrt(compensated_squared_norm(g.params));
  if (!std::isfinite(stats.grad_norm)) throw TrainingError(step_index, config.objective, "non-finite gradient");
  apply_update(state, g.params, config);
  if (!state.params.values.allFinite()) throw TrainingError(step_index, config.objective, "non-finite parameters");
  return stats;
}

TrainResult train(ModelState model, DatasetProvider& data, const TrainConfig& config,
                  const std::function<void(std::size_t, const ModelState&)>& checkpoint) {
  config.validate();
  const RngStream data_base(config.seed, kDataStream);
  const RngStream noise_base(config.seed, kNoiseStream);
  TrainStats stats;
  Fnv1a digest;
  const auto start = std::chrono::steady_clock::now();

  CompensatedSum<double> window_loss;
  std::size_t window_steps = 0;
  double window_max = 0;

  for (std::size_t k = 0; k < config.steps; ++k) {
    RngStream data_rng = data_base.derive(k);
    const PairBatch batch = data.next_batch(data_rng, config.batch_size);
    auto observe = [&](const EndpointPair& pair, const BridgeSample& sample, const WeightedTarget&, const Tensor&) {
      digest.add(pair.x0);
      digest.add(pair.x1);
      digest.add(sample.t);
      digest.add(sample.epsilon);
    };
    StepStats st;
    try {
      st = train_step(model, batch, config, noise_base.derive(k), k, observe);
    } catch (const TrainingError& e) {
      stats.failed_step = e.step();
      stats.stream_digest = digest.h;
      throw TrainingAborted(e, std::move(stats));
    }
    stats.step_losses.push_back(st.loss);
    stats.max_target_sqnorm = std::max(stats.max_target_sqnorm, st.max_target_sqnorm);
    if (config.record_samples) stats.samples.insert(stats.samples.end(), st.samples.begin(), st.samples.end());
    window_loss += st.loss;
    ++window_steps;
    window_max = std::max(window_max, st.max_target_sqnorm);
    if ((k + 1) % config.log_every == 0 || k + 1 == config.steps) {
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      stats.log.push_back({k + 1, window_loss.value() / static_cast<double>(window_steps), window_max, st.grad_norm, ms});
      window_loss = {};
      window_steps = 0;
      window_max = 0;
    }
    if (checkpoint) checkpoint(k + 1, model);
  }
  stats.stream_digest = digest.h;
  return {std::move(model), std::move(stats)};
}

VelocityField model_field(ModelConfig config, Parameters params, ObjectiveKind objective) {
  return [config = std::move(config), params = std::move(params), objective](const Tensor& x, double t,
                                                                             const Tensor* context) {
    Tensor out = forward(params, config, x, t, context);
    if (objective == ObjectiveKind::displacement) out.vec() /= (1.0 - t);
    return out;
  };
}

VelocityField model_field(const ModelState& model, ObjectiveKind objective) {
  return model_field(model.config, model.params, objective);
}

double evaluation_loss(const ModelState& model, const PairBatch& batch, const TrainConfig& config,
                       const RngStream& rng) {
  const PreparedBatch p = prepare(model, batch, config, rng);
  const Matrix pred = forward_batch(model.params, model.config, p.states, p.times, p.context);
  CompensatedSum<double> total;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const WeightedTarget& target = p.targets[i];
    total += loss(target, target.target.with_values(pred.col(static_cast<Index>(i))));
  }
  return total.value() / static_cast<double>(batch.size());
}

}  // namespace bbridge
