#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bbridge/io.hpp"
#include "bbridge/objectives.hpp"
#include "bbridge/sampler.hpp"
#include "bbridge/schedules.hpp"
#include "bbridge/tasks.hpp"
#include "bbridge/trainer.hpp"
#include "bbridge/verify.hpp"

namespace bbridge::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path default_out_dir() {
  if (const char* env = std::getenv("BBRIDGE_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "out";
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = json::parse(read_file(path));
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  return j;
}

// Flag given on the command line wins, then the config file, then the default.
template <typename T>
void overlay(const CLI::Option* opt, const json& config, const char* key, T& value) {
  if (opt->count() == 0 && config.contains(key)) value = config.at(key).get<T>();
}

std::vector<double> parse_reals(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw UsageError("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> split(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct ModelOptions {
  std::string hidden = "64,64";
  Index time_features = 8;
  std::string activation = "tanh";
};

struct TaskOptions {
  std::string task = "gaussian_shift";
  std::string shift = "2,0";
  std::string angles = "1.5707963267948966,-1.5707963267948966";
  Index grid = 4;
  Index length = 16;
  Index repeat = 4;
};

TaskSpec make_task(const TaskOptions& o) {
  TaskSpec spec;
  switch (parse_task(o.task)) {
    case TaskKind::gaussian_shift:
      spec = TaskSpec::gaussian_shift(parse_reals(o.shift));
      break;
    case TaskKind::moons_rotate:
      spec = TaskSpec::moons_rotate(parse_reals(o.angles));
      break;
    case TaskKind::grid_colorize:
      spec = TaskSpec::grid_colorize(o.grid);
      break;
    case TaskKind::signal_refine:
      spec = TaskSpec::signal_refine(o.length, o.repeat);
      break;
  }
  spec.validate();
  return spec;
}

ModelConfig make_model(const ModelOptions& o, const TaskSpec& task) {
  ModelConfig c;
  c.input_dim = task.data_dim();
  c.hidden.clear();
  for (const std::string& w : split(o.hidden)) c.hidden.push_back(std::stol(w));
  c.time_features = o.time_features;
  c.context_dim = task.context_dim();
  c.activation = parse_activation(o.activation);
  c.validate();
  return c;
}

void add_model_options(CLI::App* cmd, ModelOptions& m, std::vector<std::pair<CLI::Option*, const char*>>& opts) {
  opts.emplace_back(cmd->add_option("--hidden", m.hidden, "hidden widths, comma separated (empty for linear)"),
                    "hidden");
  opts.emplace_back(cmd->add_option("--time-features", m.time_features, "sinusoidal time features"), "time_features");
  opts.emplace_back(cmd->add_option("--activation", m.activation, "tanh | softplus"), "activation");
}

void add_task_options(CLI::App* cmd, TaskOptions& t) {
  cmd->add_option("--task", t.task, "gaussian_shift | moons_rotate | grid_colorize | signal_refine");
  cmd->add_option("--shift", t.shift, "gaussian_shift offset, comma separated");
  cmd->add_option("--angles", t.angles, "moons_rotate rotation angles (radians)");
  cmd->add_option("--grid", t.grid, "grid_colorize side length");
  cmd->add_option("--length", t.length, "signal_refine length");
  cmd->add_option("--repeat", t.repeat, "signal_refine hold factor");
}

void overlay_task(CLI::App* cmd, const json& cfg, TaskOptions& t) {
  overlay(cmd->get_option("--task"), cfg, "task", t.task);
  overlay(cmd->get_option("--shift"), cfg, "shift", t.shift);
  overlay(cmd->get_option("--angles"), cfg, "angles", t.angles);
  overlay(cmd->get_option("--grid"), cfg, "grid", t.grid);
  overlay(cmd->get_option("--length"), cfg, "length", t.length);
  overlay(cmd->get_option("--repeat"), cfg, "repeat", t.repeat);
}

void overlay_model(const std::vector<std::pair<CLI::Option*, const char*>>& opts, const json& cfg, ModelOptions& m) {
  for (const auto& [opt, key] : opts) {
    const std::string k = key;
    if (k == "hidden") overlay(opt, cfg, key, m.hidden);
    if (k == "time_features") overlay(opt, cfg, key, m.time_features);
    if (k == "activation") overlay(opt, cfg, key, m.activation);
  }
}

void write_manifest(const fs::path& path, RunManifest manifest) {
  manifest.finished_utc = utc_timestamp();
  write_file_atomic(path, dump_json(manifest.to_json()));
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string suite = "all";
  VerifyOptions options;
  std::string out;
};

int cmd_verify(const VerifyArgs& a) {
  const VerifySuite suite = parse_verify_suite(a.suite);
  const VerifyReport report = run_verify(suite, a.options);
  const std::string text = dump_json(report.to_json(suite, a.options));
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(a.out, text);
  }
  for (const Check& c : report.checks) {
    if (!c.passed) std::cerr << "FAILED [" << c.suite << "] " << c.name << ": " << c.measured << " vs " << c.bound << "\n";
  }
  std::cerr << (report.passed() ? "all " : "some ") << report.checks.size() << " checks "
            << (report.passed() ? "passed" : "did not pass") << "\n";
  return report.passed() ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------
// profile

struct ProfileArgs {
  std::string objective = "stabilized";
  Index dim = 1;
  double distance = 1.0;
  double s = 1.0;
  double grid = 0.001;
  std::size_t mc = 0;
  std::uint64_t seed = 7;
  std::string out;
  std::string svg;
};

std::string profile_svg(const std::vector<ProfilePoint>& prof, std::string_view title) {
  const double w = 640, h = 360, pad = 40;
  double smax = 0;
  for (const ProfilePoint& p : prof) smax = std::max(smax, p.S);
  if (smax <= 0) smax = 1;
  auto poly = [&](auto value, double vmax) {
    std::string pts;
    for (const ProfilePoint& p : prof) {
      const double x = pad + (w - 2 * pad) * p.t / kProfileUpperLimit;
      const double y = h - pad - (h - 2 * pad) * value(p) / vmax;
      pts += format_real(x) + "," + format_real(y) + " ";
    }
    return pts;
  };
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"360\">\n";
  svg += "<text x=\"40\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" + std::string(title) +
         " (blue: S/max S, red: C)</text>\n";
  svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" points=\"" + poly([](const ProfilePoint& p) { return p.S; }, smax) +
         "\"/>\n";
  svg += "<polyline fill=\"none\" stroke=\"#d62728\" points=\"" + poly([](const ProfilePoint& p) { return p.C; }, 1.0) +
         "\"/>\n";
  svg += "</svg>\n";
  return svg;
}

int cmd_profile(const ProfileArgs& a) {
  const ObjectiveKind kind = parse_objective(a.objective);
  if (a.dim < 1) throw UsageError("--D must be >= 1");
  Tensor x0({a.dim});
  Tensor x1({a.dim});
  x1[0] = a.distance;
  const EndpointPair pair(x0, x1);
  const std::vector<double> grid = linear_grid(a.grid);
  const ProfileMethod method = a.mc > 0 ? ProfileMethod::monte_carlo : ProfileMethod::closed_form;
  const auto prof = target_profile(kind, pair, NoiseScale(a.s), grid, method, a.mc, RngStream(a.seed, 0x9F0F11E));
  CsvWriter csv({"t", "S", "C"});
  for (const ProfilePoint& p : prof) csv.row({format_real(p.t), format_real(p.S), format_real(p.C)});
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    write_file_atomic(a.out, csv.str());
  }
  if (!a.svg.empty()) write_file_atomic(a.svg, profile_svg(prof, to_string(kind)));
  return kOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  TaskOptions task;
  ModelOptions model;
  std::string objective = "stabilized";
  double s = 1.0;
  std::size_t steps = 2000;
  std::size_t batch = 64;
  double lr = 1e-3;
  std::string optimizer = "adam";
  double t_clamp = kDefaultTimeClamp;
  std::uint64_t seed = 0;
  std::size_t log_every = 10;
  bool debug = false;
  std::string out_dir;
};

struct TrainOutcome {
  TrainResult result;
  TaskSpec task;
  TrainConfig config;
};

TrainOutcome run_training(const TaskSpec& task, const ModelConfig& model, const TrainConfig& config) {
  RngStream init_rng(config.seed, 0x1417);
  ModelState state = make_model_state(model, init_rng);
  TaskProvider provider(task);
  return {train(std::move(state), provider, config), task, config};
}

std::string stats_csv(const TrainStats& stats) {
  CsvWriter csv({"step", "loss", "max_target_sqnorm", "grad_norm", "ms"});
  for (const LogEntry& e : stats.log) {
    csv.row({std::to_string(e.step), format_real(e.loss), format_real(e.max_target_sqnorm), format_real(e.grad_norm),
             format_real(e.ms)});
  }
  return csv.str();
}

std::string debug_csv(const TrainStats& stats) {
  CsvWriter csv({"step", "sample", "t", "alpha", "alpha_sq", "target_sqnorm"});
  for (const SampleRecord& r : stats.samples) {
    csv.row({std::to_string(r.step), std::to_string(r.index), format_real(r.t), format_real(std::sqrt(r.alpha_squared)),
             format_real(r.alpha_squared), format_real(r.target_sqnorm)});
  }
  return csv.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << v;
  return ss.str();
}

int cmd_train(const TrainArgs& a) {
  const TaskSpec task = make_task(a.task);
  const ModelConfig model = make_model(a.model, task);
  TrainConfig config;
  config.objective = parse_objective(a.objective);
  config.s = NoiseScale(a.s);
  config.steps = a.steps;
  config.batch_size = a.batch;
  config.learning_rate = a.lr;
  config.optimizer = parse_optimizer(a.optimizer);
  config.t_clamp = a.t_clamp;
  config.seed = a.seed;
  config.log_every = a.log_every;
  config.record_samples = a.debug;
  config.validate();

  const fs::path dir = a.out_dir.empty() ? default_out_dir() : fs::path(a.out_dir);
  RunManifest manifest;
  manifest.command = "train";
  manifest.seed = a.seed;
  manifest.started_utc = utc_timestamp();
  manifest.config = {{"task", to_json(task)}, {"model", to_json(model)}, {"train", to_json(config)}};

  int code = kOk;
  TrainStats stats;
  std::optional<ModelState> trained;
  try {
    TrainOutcome out = run_training(task, model, config);
    stats = std::move(out.result.stats);
    trained = std::move(out.result.model);
  } catch (const TrainingAborted& e) {
    std::cerr << e.cause() << "\n";
    stats = e.stats();
    manifest.extra["failure"] = {{"step", e.step()}, {"message", e.cause()}};
    code = kNumerical;
  }

  write_file_atomic(dir / "stats.csv", stats_csv(stats));
  manifest.outputs.push_back("stats.csv");
  if (a.debug) {
    write_file_atomic(dir / "debug.csv", debug_csv(stats));
    manifest.outputs.push_back("debug.csv");
  }
  if (trained) {
    ParameterFile file{model, trained->params, {{"objective", std::string(to_string(config.objective))},
                                                {"s", config.s.value()},
                                                {"task", to_json(task)}}};
    save_parameters(dir / "params.bin", file);
    manifest.outputs.push_back("params.bin");
  }
  manifest.extra["stream_digest"] = hex64(stats.stream_digest);
  manifest.extra["max_target_sqnorm"] = stats.max_target_sqnorm;
  write_manifest(dir / "manifest.json", manifest);
  return code;
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  std::string params;
  bool oracle = false;
  TaskOptions task;
  std::size_t steps = 16;
  double gamma = 1.0;
  std::string mode = "corrected";
  std::optional<double> s;
  std::size_t runs = 1000;
  std::uint64_t seed = 0;
  std::size_t trajectories = 0;
  std::string out_dir;
};

int cmd_sample(const SampleArgs& a, const CLI::App* cmd) {
  const Schedule schedule = shifted_schedule(a.steps, a.gamma);
  const SamplerMode mode = parse_sampler_mode(a.mode);
  const fs::path dir = a.out_dir.empty() ? default_out_dir() : fs::path(a.out_dir);

  RunManifest manifest;
  manifest.command = "sample";
  manifest.seed = a.seed;
  manifest.started_utc = utc_timestamp();

  TaskSpec task = make_task(a.task);
  FieldFactory factory;
  double s = a.s.value_or(1.0);
  if (a.oracle) {
    if (!a.params.empty()) throw UsageError("--oracle and --params are exclusive");
    factory = [](const EndpointPair& pair) { return oracle_field(pair.x1); };
    manifest.config["field"] = "oracle";
  } else {
    if (a.params.empty()) throw UsageError("sample needs --params or --oracle");
    ParameterFile file = load_parameters(a.params);
    if (cmd->get_option("--task")->count() == 0 && file.metadata.contains("task")) {
      task = task_spec_from_json(file.metadata.at("task"));
    }
    if (!a.s && file.metadata.contains("s")) s = file.metadata.at("s").get<double>();
    if (file.config.input_dim != task.data_dim() || file.config.context_dim != task.context_dim()) {
      throw UsageError("parameter file does not match the task dimensions");
    }
    const ObjectiveKind objective = parse_objective(file.metadata.value("objective", std::string("stabilized")));
    VelocityField field = model_field(file.config, file.params, objective);
    factory = [field](const EndpointPair&) { return field; };
    manifest.config["field"] = {{"params", fs::path(a.params).filename().string()},
                                {"objective", std::string(to_string(objective))},
                                {"model", to_json(file.config)}};
  }
  const NoiseScale noise(s);
  manifest.config["task"] = to_json(task);
  manifest.config["sampler"] = {{"mode", std::string(to_string(mode))},
                                {"N", a.steps},
                                {"gamma", a.gamma},
                                {"s", s},
                                {"runs", a.runs},
                                {"schedule", std::vector<double>(schedule.points().begin(), schedule.points().end())}};

  const RngStream rng(a.seed, 0x5A3F1E);
  Evaluation ev;
  try {
    ev = evaluate_per_pair(factory, task, schedule, mode, noise, a.runs, rng);
  } catch (const IntegrationError& e) {
    std::cerr << e.what() << "\n";
    manifest.extra["failure"] = {{"step", e.step()}, {"message", e.what()}};
    write_manifest(dir / "manifest.json", manifest);
    return kNumerical;
  }
  write_file_atomic(dir / "endpoints.csv", endpoints_csv(ev.pairs, ev.endpoints));
  write_file_atomic(dir / "eval.json", dump_json(to_json(ev.report)));
  write_file_atomic(dir / "schedule.csv", schedule_csv(schedule));
  manifest.outputs = {"endpoints.csv", "eval.json", "schedule.csv"};
  // Re-integrate the first runs with their original streams to export full paths.
  const RngStream sample_base = rng.derive(1);
  for (std::size_t r = 0; r < std::min(a.trajectories, a.runs); ++r) {
    RngStream run_rng = sample_base.derive(r);
    const EndpointPair& pair = ev.pairs.pairs[r];
    const auto traj = sample(mode, pair.x0, factory(pair), schedule, noise, run_rng, ev.pairs.context(r));
    const std::string name = "trajectory_" + std::to_string(r) + ".csv";
    write_file_atomic(dir / name, trajectory_csv(traj, schedule));
    manifest.outputs.push_back(name);
  }
  write_manifest(dir / "manifest.json", manifest);
  std::cout << dump_json(to_json(ev.report));
  return kOk;
}

// ---------------------------------------------------------------------------
// ablate

struct AblateArgs {
  std::string axis;
  std::string values;
  TrainArgs base;
  std::size_t steps_N = 16;
  double gamma = 1.0;
  std::string mode = "corrected";
  std::size_t runs = 1000;
};

struct CellResult {
  std::string status = "ok";
  EvalReport report;
  double max_target_sqnorm = 0;
  double max_alpha_sq = 0;
  double final_loss = 0;
  double seed_spread = 0;  // max |endpoint difference| between two sampler seeds
};

double seed_spread(const VelocityField& field, const TaskSpec& task, const Schedule& sch, SamplerMode mode,
                   NoiseScale s, std::uint64_t seed) {
  const std::size_t probe = 16;
  const RngStream a(seed, 0xE7A1), b(seed + 1, 0xE7A1);
  PairBatch pairs = generate_pairs(task, probe, a.derive(0));
  double worst = 0;
  for (std::size_t r = 0; r < probe; ++r) {
    RngStream ra = a.derive(1).derive(r), rb = b.derive(1).derive(r);
    const Tensor xa = sample_final(mode, pairs.pairs[r].x0, field, sch, s, ra, pairs.context(r));
    const Tensor xb = sample_final(mode, pairs.pairs[r].x0, field, sch, s, rb, pairs.context(r));
    worst = std::max(worst, (xa.vec() - xb.vec()).cwiseAbs().maxCoeff());
  }
  return worst;
}

int cmd_ablate(const AblateArgs& a) {
  const std::vector<std::string> values = split(a.values);
  if (values.size() < 2) throw UsageError("ablate needs at least two values");
  if (a.axis != "objective" && a.axis != "noise_scale" && a.axis != "steps" && a.axis != "gamma") {
    throw UsageError("unknown ablation axis '" + a.axis + "'");
  }
  const TaskSpec task = make_task(a.base.task);
  const ModelConfig model = make_model(a.base.model, task);
  TrainConfig base;
  base.objective = parse_objective(a.base.objective);
  base.s = NoiseScale(a.base.s);
  base.steps = a.base.steps;
  base.batch_size = a.base.batch;
  base.learning_rate = a.base.lr;
  base.optimizer = parse_optimizer(a.base.optimizer);
  base.t_clamp = a.base.t_clamp;
  base.seed = a.base.seed;
  base.log_every = a.base.log_every;
  base.record_samples = true;
  base.validate();
  const SamplerMode mode = parse_sampler_mode(a.mode);
  const fs::path dir = a.base.out_dir.empty() ? default_out_dir() : fs::path(a.base.out_dir);

  RunManifest manifest;
  manifest.command = "ablate";
  manifest.seed = base.seed;
  manifest.started_utc = utc_timestamp();
  manifest.config = {{"axis", a.axis},
                     {"values", values},
                     {"task", to_json(task)},
                     {"model", to_json(model)},
                     {"train", to_json(base)},
                     {"sampler", {{"mode", std::string(to_string(mode))}, {"N", a.steps_N}, {"gamma", a.gamma},
                                  {"runs", a.runs}}}};

  const bool shared_model = a.axis == "steps" || a.axis == "gamma";
  std::optional<TrainResult> shared;
  std::string shared_error;
  if (shared_model) {
    try {
      shared = run_training(task, model, base).result;
    } catch (const std::exception& e) {
      shared_error = e.what();
    }
  }

  auto summarize = [](const TrainStats& st, CellResult& c) {
    c.max_target_sqnorm = st.max_target_sqnorm;
    for (const SampleRecord& r : st.samples) c.max_alpha_sq = std::max(c.max_alpha_sq, r.alpha_squared);
    c.final_loss = st.log.empty() ? 0.0 : st.log.back().loss;
  };

  CsvWriter csv({"axis", "value", "status", "paired_mse", "energy_distance", "source_energy_distance",
                 "mean_displacement_error", "samples", "max_target_sqnorm", "max_alpha_sq", "final_loss",
                 "endpoint_seed_spread"});
  const RngStream eval_rng(base.seed, 0xE7A1);
  for (const std::string& v : values) {
    CellResult cell;
    try {
      TrainConfig cfg = base;
      std::size_t n = a.steps_N;
      double gamma = a.gamma;
      if (a.axis == "objective") cfg.objective = parse_objective(v);
      if (a.axis == "noise_scale") cfg.s = NoiseScale(std::stod(v));
      if (a.axis == "steps") n = static_cast<std::size_t>(std::stoul(v));
      if (a.axis == "gamma") gamma = std::stod(v);
      const Schedule sch = shifted_schedule(n, gamma);
      TrainResult trained;
      if (shared_model) {
        if (!shared) throw std::runtime_error(shared_error);
        trained = *shared;
      } else {
        trained = run_training(task, model, cfg).result;
      }
      summarize(trained.stats, cell);
      const VelocityField field = model_field(trained.model, cfg.objective);
      cell.report = evaluate(field, task, sch, mode, cfg.s, a.runs, eval_rng).report;
      cell.seed_spread = seed_spread(field, task, sch, mode, cfg.s, base.seed);
    } catch (const std::exception& e) {
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      cell.status = "failed: " + msg;
    }
    csv.row({a.axis, v, cell.status, format_real(cell.report.paired_mse), format_real(cell.report.energy_distance),
             format_real(cell.report.source_energy_distance), format_real(cell.report.mean_displacement_error),
             std::to_string(cell.report.samples), format_real(cell.max_target_sqnorm), format_real(cell.max_alpha_sq),
             format_real(cell.final_loss), format_real(cell.seed_spread)});
  }
  write_file_atomic(dir / "summary.csv", csv.str());
  manifest.outputs = {"summary.csv"};
  write_manifest(dir / "manifest.json", manifest);
  std::cout << csv.str();
  return kOk;
}

// ---------------------------------------------------------------------------
// schedule dump / simulate

struct ScheduleArgs {
  std::size_t steps = 16;
  double gamma = 1.0;
  std::string out;
};

int cmd_schedule_dump(const ScheduleArgs& a) {
  const std::string csv = schedule_csv(shifted_schedule(a.steps, a.gamma));
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_file_atomic(a.out, csv);
  }
  return kOk;
}

struct SimulateArgs {
  std::string x0 = "0";
  std::string x1 = "1";
  double s = 1.0;
  std::size_t steps = 16;
  double gamma = 1.0;
  std::size_t paths = 8;
  std::uint64_t seed = 0;
  std::string out;
};

// Exact bridge paths on the schedule grid: each point drawn from the
// conditional law given the previous one.
int cmd_simulate(const SimulateArgs& a) {
  const auto v0 = parse_reals(a.x0);
  const auto v1 = parse_reals(a.x1);
  if (v0.size() != v1.size() || v0.empty()) throw UsageError("--x0 and --x1 need equal nonzero length");
  Tensor x0({static_cast<Index>(v0.size())}), x1({static_cast<Index>(v1.size())});
  for (std::size_t i = 0; i < v0.size(); ++i) {
    x0[static_cast<Index>(i)] = v0[i];
    x1[static_cast<Index>(i)] = v1[i];
  }
  const Schedule sch = shifted_schedule(a.steps, a.gamma);
  const NoiseScale s(a.s);
  std::vector<std::string> header{"path", "k", "t"};
  for (std::size_t i = 0; i < v0.size(); ++i) header.push_back("coord_" + std::to_string(i));
  CsvWriter csv(header);
  const RngStream base(a.seed, 0x5111);
  for (std::size_t p = 0; p < a.paths; ++p) {
    RngStream rng = base.derive(p);
    Tensor x = x0;
    for (std::size_t k = 0; k <= sch.steps(); ++k) {
      if (k > 0) {
        const Tensor mean = conditional_mean(x, x1, sch[k - 1], sch[k]);
        const double sd = std::sqrt(conditional_variance(sch[k - 1], sch[k], s));
        const Tensor z = gaussian(rng, x.shape());
        x = mean.with_values(mean.vec() + sd * z.vec());
      }
      std::vector<std::string> cells{std::to_string(p), std::to_string(k), format_real(sch[k])};
      for (double v : x.values()) cells.push_back(format_real(v));
      csv.row(cells);
    }
  }
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    write_file_atomic(a.out, csv.str());
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Brownian-bridge data-to-data generative modeling toolkit", "bbridge"};
  app.require_subcommand(1);
  std::string config_path;

  // verify
  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "run the statistical verification suites");
  v->add_option("--suite", verify.suite, "bridge | sampler | objectives | schedules | all");
  v->add_option("--mc", verify.options.mc, "Monte-Carlo draws per moment estimate");
  v->add_option("--profile-mc", verify.options.profile_mc, "draws per grid point for alpha/profile checks");
  v->add_option("--runs", verify.options.runs, "sampler repetitions for endpoint variance");
  v->add_option("--seed", verify.options.seed, "random seed");
  v->add_option("--sigma", verify.options.sigma_bound, "z-score bound for mean checks");
  v->add_option("--rel-tol", verify.options.variance_rel_tol, "relative tolerance for variance checks");
  v->add_option("--endpoint-tol", verify.options.endpoint_rel_tol, "relative tolerance for endpoint variance");
  v->add_option("--grad-tol", verify.options.gradient_rel_tol, "finite-difference relative tolerance");
  v->add_option("--out", verify.out, "write the JSON report here instead of stdout");

  // profile
  ProfileArgs profile;
  auto* p = app.add_subcommand("profile", "loss-contribution profile S(t), C(t) as CSV");
  p->add_option("--objective", profile.objective, "displacement | velocity | stabilized");
  p->add_option("--D", profile.dim, "latent dimension");
  p->add_option("--distance", profile.distance, "||x1 - x0||");
  p->add_option("--s", profile.s, "noise scale");
  p->add_option("--grid", profile.grid, "grid step on [0, 0.999]");
  p->add_option("--mc", profile.mc, "Monte-Carlo draws per point (0 = closed form)");
  p->add_option("--seed", profile.seed, "random seed for --mc");
  p->add_option("--out", profile.out, "CSV output path (stdout if omitted)");
  p->add_option("--svg", profile.svg, "optional SVG plot path");

  // train
  TrainArgs tr;
  std::vector<std::pair<CLI::Option*, const char*>> train_model_opts;
  auto* t = app.add_subcommand("train", "train a velocity network on a synthetic task");
  add_task_options(t, tr.task);
  add_model_options(t, tr.model, train_model_opts);
  t->add_option("--objective", tr.objective, "displacement | velocity | stabilized");
  t->add_option("--s", tr.s, "noise scale");
  t->add_option("--steps", tr.steps, "optimizer steps");
  t->add_option("--batch", tr.batch, "batch size");
  t->add_option("--lr", tr.lr, "learning rate");
  t->add_option("--optimizer", tr.optimizer, "adam | sgd");
  t->add_option("--t-clamp", tr.t_clamp, "t is drawn from U(0, 1 - t_clamp)");
  t->add_option("--seed", tr.seed, "random seed")->required();
  t->add_option("--log-every", tr.log_every, "stats row every n steps");
  t->add_flag("--debug", tr.debug, "write per-sample debug.csv");
  t->add_option("--out-dir", tr.out_dir, "output directory");
  t->add_option("--config", config_path, "JSON config (flags override it)");

  // sample
  SampleArgs sa;
  double sample_s = 1.0;
  auto* sm = app.add_subcommand("sample", "integrate sources to endpoints and score them");
  sm->add_option("--params", sa.params, "parameter file from train");
  sm->add_flag("--oracle", sa.oracle, "use the analytic conditional velocity (x1 - x)/(1 - t)");
  add_task_options(sm, sa.task);
  sm->add_option("--N", sa.steps, "integration steps");
  sm->add_option("--gamma", sa.gamma, "schedule shift (1 = uniform)");
  sm->add_option("--mode", sa.mode, "standard | corrected");
  auto* sample_s_opt = sm->add_option("--s", sample_s, "noise scale (defaults to the training value)");
  sm->add_option("--runs", sa.runs, "number of fresh pairs");
  sm->add_option("--seed", sa.seed, "random seed")->required();
  sm->add_option("--trajectories", sa.trajectories, "export full paths of the first n runs");
  sm->add_option("--out-dir", sa.out_dir, "output directory");
  sm->add_option("--config", config_path, "JSON config (flags override it)");

  // ablate
  AblateArgs ab;
  std::vector<std::pair<CLI::Option*, const char*>> ablate_model_opts;
  auto* a = app.add_subcommand("ablate", "train + evaluate across one axis");
  a->add_option("--axis", ab.axis, "objective | noise_scale | steps | gamma")->required();
  a->add_option("--values", ab.values, "comma-separated axis values")->required();
  add_task_options(a, ab.base.task);
  add_model_options(a, ab.base.model, ablate_model_opts);
  a->add_option("--objective", ab.base.objective, "base objective");
  a->add_option("--s", ab.base.s, "base noise scale");
  a->add_option("--steps", ab.base.steps, "training steps per cell");
  a->add_option("--batch", ab.base.batch, "batch size");
  a->add_option("--lr", ab.base.lr, "learning rate");
  a->add_option("--optimizer", ab.base.optimizer, "adam | sgd");
  a->add_option("--seed", ab.base.seed, "shared base seed")->required();
  a->add_option("--N", ab.steps_N, "integration steps");
  a->add_option("--gamma", ab.gamma, "schedule shift");
  a->add_option("--mode", ab.mode, "standard | corrected");
  a->add_option("--runs", ab.runs, "evaluation pairs per cell");
  a->add_option("--out-dir", ab.base.out_dir, "output directory");
  a->add_option("--config", config_path, "JSON config (flags override it)");

  // schedule dump
  ScheduleArgs sch;
  auto* s = app.add_subcommand("schedule", "timestep schedules");
  auto* dump = s->add_subcommand("dump", "print i,t rows");
  s->require_subcommand(1);
  dump->add_option("--N", sch.steps, "steps");
  dump->add_option("--gamma", sch.gamma, "shift (1 = uniform)");
  dump->add_option("--out", sch.out, "CSV output path");

  // simulate
  SimulateArgs sim;
  auto* si = app.add_subcommand("simulate", "exact bridge paths on a schedule grid");
  si->add_option("--x0", sim.x0, "source point, comma separated");
  si->add_option("--x1", sim.x1, "target point, comma separated");
  si->add_option("--s", sim.s, "noise scale");
  si->add_option("--N", sim.steps, "grid steps");
  si->add_option("--gamma", sim.gamma, "schedule shift");
  si->add_option("--paths", sim.paths, "number of paths");
  si->add_option("--seed", sim.seed, "random seed");
  si->add_option("--out", sim.out, "CSV output path");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    const json cfg = load_config(config_path);
    if (*v) return cmd_verify(verify);
    if (*p) return cmd_profile(profile);
    if (*t) {
      overlay_task(t, cfg, tr.task);
      overlay_model(train_model_opts, cfg, tr.model);
      overlay(t->get_option("--objective"), cfg, "objective", tr.objective);
      overlay(t->get_option("--s"), cfg, "s", tr.s);
      overlay(t->get_option("--steps"), cfg, "steps", tr.steps);
      overlay(t->get_option("--batch"), cfg, "batch", tr.batch);
      overlay(t->get_option("--lr"), cfg, "lr", tr.lr);
      overlay(t->get_option("--optimizer"), cfg, "optimizer", tr.optimizer);
      overlay(t->get_option("--t-clamp"), cfg, "t_clamp", tr.t_clamp);
      overlay(t->get_option("--log-every"), cfg, "log_every", tr.log_every);
      return cmd_train(tr);
    }
    if (*sm) {
      overlay_task(sm, cfg, sa.task);
      overlay(sm->get_option("--N"), cfg, "N", sa.steps);
      overlay(sm->get_option("--gamma"), cfg, "gamma", sa.gamma);
      overlay(sm->get_option("--mode"), cfg, "mode", sa.mode);
      overlay(sm->get_option("--runs"), cfg, "runs", sa.runs);
      if (sample_s_opt->count() > 0) {
        sa.s = sample_s;
      } else if (cfg.contains("s")) {
        sa.s = cfg.at("s").get<double>();
      }
      return cmd_sample(sa, sm);
    }
    if (*a) {
      overlay_task(a, cfg, ab.base.task);
      overlay_model(ablate_model_opts, cfg, ab.base.model);
      overlay(a->get_option("--objective"), cfg, "objective", ab.base.objective);
      overlay(a->get_option("--s"), cfg, "s", ab.base.s);
      overlay(a->get_option("--steps"), cfg, "steps", ab.base.steps);
      overlay(a->get_option("--batch"), cfg, "batch", ab.base.batch);
      overlay(a->get_option("--lr"), cfg, "lr", ab.base.lr);
      overlay(a->get_option("--optimizer"), cfg, "optimizer", ab.base.optimizer);
      overlay(a->get_option("--N"), cfg, "N", ab.steps_N);
      overlay(a->get_option("--gamma"), cfg, "gamma", ab.gamma);
      overlay(a->get_option("--mode"), cfg, "mode", ab.mode);
      overlay(a->get_option("--runs"), cfg, "runs", ab.runs);
      return cmd_ablate(ab);
    }
    if (*dump) return cmd_schedule_dump(sch);
    if (*si) return cmd_simulate(sim);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const IntegrationError& e) {
    std::cerr << e.what() << "\n";
    return kNumerical;
  } catch (const TrainingError& e) {
    std::cerr << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
  return kUsage;
}

}  // namespace bbridge::cli
