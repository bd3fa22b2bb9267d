#include "bbridge/tasks.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bbridge/io.hpp"

namespace bbridge {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::gaussian_shift:
      return "gaussian_shift";
    case TaskKind::moons_rotate:
      return "moons_rotate";
    case TaskKind::grid_colorize:
      return "grid_colorize";
    case TaskKind::signal_refine:
      return "signal_refine";
  }
  return "unknown";
}

TaskKind parse_task(std::string_view name) {
  for (TaskKind k : {TaskKind::gaussian_shift, TaskKind::moons_rotate, TaskKind::grid_colorize,
                     TaskKind::signal_refine}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

Index TaskSpec::data_dim() const {
  switch (kind) {
    case TaskKind::gaussian_shift:
    case TaskKind::signal_refine:
      return dim;
    case TaskKind::moons_rotate:
      return 2;
    case TaskKind::grid_colorize:
      return 3 * grid * grid;
  }
  return dim;
}

Index TaskSpec::context_dim() const { return kind == TaskKind::moons_rotate ? 1 : 0; }

void TaskSpec::validate() const {
  switch (kind) {
    case TaskKind::gaussian_shift:
      if (dim < 1 || static_cast<Index>(shift.size()) != dim) {
        throw std::invalid_argument("gaussian_shift: shift length must equal dim >= 1");
      }
      break;
    case TaskKind::moons_rotate:
      if (angles.empty()) throw std::invalid_argument("moons_rotate: need at least one angle");
      if (!(moon_noise >= 0.0)) throw std::invalid_argument("moons_rotate: noise must be >= 0");
      break;
    case TaskKind::grid_colorize:
      if (grid < 1 || grid > 8) throw std::invalid_argument("grid_colorize: grid must be in 1..8");
      break;
    case TaskKind::signal_refine:
      if (repeat < 1 || dim < repeat || dim % repeat != 0) {
        throw std::invalid_argument("signal_refine: length must be a positive multiple of repeat");
      }
      break;
  }
}

TaskSpec TaskSpec::gaussian_shift(std::vector<double> shift) {
  TaskSpec s;
  s.kind = TaskKind::gaussian_shift;
  s.dim = static_cast<Index>(shift.size());
  s.shift = std::move(shift);
  return s;
}

TaskSpec TaskSpec::moons_rotate(std::vector<double> angles) {
  TaskSpec s;
  s.kind = TaskKind::moons_rotate;
  s.dim = 2;
  s.angles = std::move(angles);
  return s;
}

TaskSpec TaskSpec::grid_colorize(Index grid) {
  TaskSpec s;
  s.kind = TaskKind::grid_colorize;
  s.grid = grid;
  s.dim = 3 * grid * grid;
  return s;
}

TaskSpec TaskSpec::signal_refine(Index length, Index repeat) {
  TaskSpec s;
  s.kind = TaskKind::signal_refine;
  s.dim = length;
  s.repeat = repeat;
  return s;
}

nlohmann::json to_json(const TaskSpec& s) {
  nlohmann::json j{{"task", std::string(to_string(s.kind))}, {"dim", s.data_dim()}};
  switch (s.kind) {
    case TaskKind::gaussian_shift:
      j["shift"] = s.shift;
      break;
    case TaskKind::moons_rotate:
      j["angles"] = s.angles;
      j["moon_noise"] = s.moon_noise;
      break;
    case TaskKind::grid_colorize:
      j["grid"] = s.grid;
      break;
    case TaskKind::signal_refine:
      j["repeat"] = s.repeat;
      break;
  }
  return j;
}

TaskSpec task_spec_from_json(const nlohmann::json& j) {
  TaskSpec s;
  s.kind = parse_task(j.at("task").get<std::string>());
  s.dim = j.value("dim", s.dim);
  s.shift = j.value("shift", s.shift);
  s.angles = j.value("angles", s.angles);
  s.moon_noise = j.value("moon_noise", s.moon_noise);
  s.grid = j.value("grid", s.grid);
  s.repeat = j.value("repeat", s.repeat);
  if (s.kind == TaskKind::grid_colorize) s.dim = 3 * s.grid * s.grid;
  if (s.kind == TaskKind::moons_rotate) s.dim = 2;
  s.validate();
  return s;
}

namespace {

EndpointPair shift_pair(const TaskSpec& spec, RngStream& rng) {
  Tensor x0 = gaussian(rng, {spec.dim});
  Tensor x1 = x0;
  for (Index i = 0; i < spec.dim; ++i) x1[i] += spec.shift[static_cast<std::size_t>(i)];
  return {std::move(x0), std::move(x1)};
}

EndpointPair moons_pair(const TaskSpec& spec, RngStream& rng, Tensor& context) {
  const auto [u, pick] = rng.next_uniform_pair();
  const auto [n0, n1] = rng.next_normal_pair();
  const double a = std::numbers::pi * u;
  Tensor x0({2});
  if (pick <= 0.5) {
    x0[0] = std::cos(a) - 0.5;
    x0[1] = std::sin(a) - 0.25;
  } else {
    x0[0] = 0.5 - std::cos(a);
    x0[1] = 0.25 - std::sin(a);
  }
  x0[0] += spec.moon_noise * n0;
  x0[1] += spec.moon_noise * n1;
  const double which = rng.uniform();
  auto idx = static_cast<std::size_t>(which * static_cast<double>(spec.angles.size()));
  if (idx >= spec.angles.size()) idx = spec.angles.size() - 1;
  const double angle = spec.angles[idx];
  Tensor x1({2});
  x1[0] = std::cos(angle) * x0[0] - std::sin(angle) * x0[1];
  x1[1] = std::sin(angle) * x0[0] + std::cos(angle) * x0[1];
  context = Tensor::from({angle});
  return {std::move(x0), std::move(x1)};
}

// Smooth color field c(x, y) = a + b x + d y per channel on a g x g grid,
// stored row-major as (row, col, channel). The source is its luminance.
EndpointPair colorize_pair(const TaskSpec& spec, RngStream& rng) {
  const Index g = spec.grid;
  Vector<double> coef(9);
  fill_gaussian(rng, coef);
  Tensor x1({g, g, 3});
  Tensor x0({g, g, 3});
  for (Index r = 0; r < g; ++r) {
    for (Index c = 0; c < g; ++c) {
      const double y = g > 1 ? static_cast<double>(r) / static_cast<double>(g - 1) - 0.5 : 0.0;
      const double x = g > 1 ? static_cast<double>(c) / static_cast<double>(g - 1) - 0.5 : 0.0;
      double rgb[3];
      for (Index ch = 0; ch < 3; ++ch) {
        rgb[ch] = 0.5 * coef[3 * ch] + 0.5 * coef[3 * ch + 1] * x + 0.5 * coef[3 * ch + 2] * y;
        x1[(r * g + c) * 3 + ch] = rgb[ch];
      }
      const double luma = 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
      for (Index ch = 0; ch < 3; ++ch) x0[(r * g + c) * 3 + ch] = luma;
    }
  }
  return {std::move(x0), std::move(x1)};
}

// Target: three random sinusoids (1..3 cycles over the signal). Source: every
// k-th target sample held for k samples.
EndpointPair refine_pair(const TaskSpec& spec, RngStream& rng) {
  const Index n = spec.dim;
  Vector<double> amp(3);
  fill_gaussian(rng, amp);
  double phase[3];
  for (double& p : phase) p = 2.0 * std::numbers::pi * rng.uniform();
  Tensor x1({n});
  for (Index i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n);
    double v = 0;
    for (int f = 0; f < 3; ++f) v += 0.5 * amp[f] * std::sin(2.0 * std::numbers::pi * (f + 1) * u + phase[f]);
    x1[i] = v;
  }
  Tensor x0({n});
  for (Index i = 0; i < n; ++i) x0[i] = x1[(i / spec.repeat) * spec.repeat];
  return {std::move(x0), std::move(x1)};
}

}  // namespace

PairBatch generate_pairs(const TaskSpec& spec, std::size_t count, const RngStream& rng) {
  spec.validate();
  if (count < 1) throw std::invalid_argument("generate_pairs: count must be >= 1");
  PairBatch batch;
  batch.pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream r = rng.derive(i);
    switch (spec.kind) {
      case TaskKind::gaussian_shift:
        batch.pairs.push_back(shift_pair(spec, r));
        break;
      case TaskKind::moons_rotate: {
        Tensor ctx;
        batch.pairs.push_back(moons_pair(spec, r, ctx));
        batch.contexts.push_back(std::move(ctx));
        break;
      }
      case TaskKind::grid_colorize:
        batch.pairs.push_back(colorize_pair(spec, r));
        break;
      case TaskKind::signal_refine:
        batch.pairs.push_back(refine_pair(spec, r));
        break;
    }
  }
  return batch;
}

PairBatch TaskProvider::next_batch(RngStream& rng, std::size_t count) {
  PairBatch b = generate_pairs(spec_, count, rng);
  rng = rng.derive(count);
  return b;
}

Matrix stack_columns(const std::vector<Tensor>& xs) {
  if (xs.empty()) return Matrix(0, 0);
  Matrix m(xs.front().size(), static_cast<Index>(xs.size()));
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (xs[j].size() != m.rows()) throw std::invalid_argument("stack_columns: ragged set");
    m.col(static_cast<Index>(j)) = xs[j].vec();
  }
  return m;
}

namespace {
double mean_pairwise_distance(const Matrix& a, const Matrix& b) {
  CompensatedSum<double> acc;
  for (Index i = 0; i < a.cols(); ++i) {
    for (Index j = 0; j < b.cols(); ++j) acc += (a.col(i) - b.col(j)).norm();
  }
  return acc.value() / (static_cast<double>(a.cols()) * static_cast<double>(b.cols()));
}
}  // namespace

double energy_distance(const Matrix& a, const Matrix& b) {
  if (a.cols() == 0 || b.cols() == 0) throw std::invalid_argument("energy_distance: empty sample set");
  if (a.rows() != b.rows()) throw std::invalid_argument("energy_distance: dimension mismatch");
  return 2.0 * mean_pairwise_distance(a, b) - mean_pairwise_distance(a, a) - mean_pairwise_distance(b, b);
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"paired_mse", r.paired_mse},
          {"energy_distance", r.energy_distance},
          {"source_energy_distance", r.source_energy_distance},
          {"mean_displacement_error", r.mean_displacement_error},
          {"samples", r.samples}};
}

EvalReport score_endpoints(const PairBatch& pairs, const std::vector<Tensor>& endpoints) {
  if (pairs.size() != endpoints.size() || pairs.size() == 0) {
    throw std::invalid_argument("score_endpoints: need one endpoint per pair");
  }
  std::vector<Tensor> sources, targets;
  for (const EndpointPair& p : pairs.pairs) {
    sources.push_back(p.x0);
    targets.push_back(p.x1);
  }
  const Matrix x0 = stack_columns(sources);
  const Matrix x1 = stack_columns(targets);
  const Matrix gen = stack_columns(endpoints);
  const auto n = static_cast<double>(pairs.size());

  EvalReport r;
  r.samples = pairs.size();
  CompensatedSum<double> mse;
  for (Index j = 0; j < gen.cols(); ++j) mse += compensated_squared_norm(gen.col(j) - x1.col(j));
  r.paired_mse = mse.value() / n;
  r.energy_distance = energy_distance(gen, x1);
  r.source_energy_distance = energy_distance(x0, x1);
  Vector<double> drift(x0.rows());
  for (Index i = 0; i < x0.rows(); ++i) {
    drift[i] = (compensated_sum(gen.row(i)) - compensated_sum(x1.row(i))) / n;
  }
  r.mean_displacement_error = std::sqrt(compensated_squared_norm(drift));
  return r;
}

Evaluation evaluate_per_pair(const FieldFactory& make_field, const TaskSpec& spec, const Schedule& schedule,
                             SamplerMode mode, NoiseScale s, std::size_t runs, const RngStream& rng) {
  Evaluation ev;
  ev.pairs = generate_pairs(spec, runs, rng.derive(0));
  const RngStream sample_base = rng.derive(1);
  ev.endpoints.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    RngStream run_rng = sample_base.derive(r);
    const EndpointPair& pair = ev.pairs.pairs[r];
    ev.endpoints.push_back(sample_final(mode, pair.x0, make_field(pair), schedule, s, run_rng, ev.pairs.context(r)));
  }
  ev.report = score_endpoints(ev.pairs, ev.endpoints);
  return ev;
}

Evaluation evaluate(const VelocityField& field, const TaskSpec& spec, const Schedule& schedule, SamplerMode mode,
                    NoiseScale s, std::size_t runs, const RngStream& rng) {
  return evaluate_per_pair([&](const EndpointPair&) { return field; }, spec, schedule, mode, s, runs, rng);
}

namespace {
void append_columns(std::vector<std::string>& header, const std::string& prefix, Index dim) {
  for (Index i = 0; i < dim; ++i) header.push_back(prefix + std::to_string(i));
}
void append_values(std::vector<std::string>& cells, const Tensor& t) {
  for (double v : t.values()) cells.push_back(format_real(v));
}
}  // namespace

std::string pairs_csv(const PairBatch& pairs) {
  if (pairs.size() == 0) throw std::invalid_argument("pairs_csv: empty batch");
  const Index dim = pairs.pairs.front().dim();
  std::vector<std::string> header;
  append_columns(header, "x0_", dim);
  append_columns(header, "x1_", dim);
  CsvWriter csv(header);
  for (const EndpointPair& p : pairs.pairs) {
    std::vector<std::string> cells;
    append_values(cells, p.x0);
    append_values(cells, p.x1);
    csv.row(cells);
  }
  return csv.str();
}

std::string endpoints_csv(const PairBatch& pairs, const std::vector<Tensor>& endpoints) {
  if (pairs.size() != endpoints.size() || pairs.size() == 0) throw std::invalid_argument("endpoints_csv: size mismatch");
  const Index dim = pairs.pairs.front().dim();
  std::vector<std::string> header{"run"};
  append_columns(header, "x0_", dim);
  append_columns(header, "x1_", dim);
  append_columns(header, "x1hat_", dim);
  CsvWriter csv(header);
  for (std::size_t r = 0; r < endpoints.size(); ++r) {
    std::vector<std::string> cells{std::to_string(r)};
    append_values(cells, pairs.pairs[r].x0);
    append_values(cells, pairs.pairs[r].x1);
    append_values(cells, endpoints[r]);
    csv.row(cells);
  }
  return csv.str();
}

}  // namespace bbridge
