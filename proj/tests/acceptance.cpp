// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bbridge/io.hpp"
#include "bbridge/objectives.hpp"
#include "bbridge/sampler.hpp"
#include "bbridge/schedules.hpp"
#include "bbridge/tasks.hpp"
#include "bbridge/trainer.hpp"
#include "bbridge/verify.hpp"
#include "cli.hpp"

namespace fs = std::filesystem;
using namespace bbridge;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;
};

std::string num(double x) {
  std::ostringstream ss;
  ss.precision(6);
  ss << x;
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bbridge_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the command line tool in-process with its stdout discarded.
int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bbridge");
  std::ostringstream sink;
  std::streambuf* saved = std::cout.rdbuf(sink.rdbuf());
  int rc = 0;
  try {
    rc = cli::run(args);
  } catch (...) {
    std::cout.rdbuf(saved);
    throw;
  }
  std::cout.rdbuf(saved);
  return rc;
}

// 1 -------------------------------------------------------------------------

Outcome bridge_statistics() {
  const auto start = std::chrono::steady_clock::now();
  const EndpointPair pair{Tensor::from({0.3, -1.2, 2.0}), Tensor::from({1.5, 0.4, -0.7})};
  const RngStream base(101, 1);
  double worst_z = 0, worst_rel = 0;
  std::uint64_t cell = 0;
  for (double t : {0.1, 0.5, 0.9}) {
    for (double s : {0.5, 1.0, 2.0}) {
      const MomentCheck m = bridge_marginal_moments(pair, t, NoiseScale(s), 100000, base.derive(cell++));
      worst_z = std::max(worst_z, m.max_mean_z);
      worst_rel = std::max(worst_rel, m.max_variance_rel);
    }
  }
  const double elapsed = seconds_since(start);
  return {worst_z <= 3.0 && worst_rel <= 0.03 && elapsed <= 10.0,
          "max mean z " + num(worst_z) + " (<= 3), max variance rel err " + num(worst_rel) + " (<= 0.03), " +
              num(elapsed) + " s (<= 10)"};
}

// 2 -------------------------------------------------------------------------

Outcome check_conditional_variance() {
  const RngStream base(102, 2);
  double worst = 0;
  std::uint64_t cell = 0;
  for (const auto& [t1, t2] : std::vector<std::pair<double, double>>{{0.25, 0.5}, {0.5, 0.75}, {0.1, 0.9}}) {
    const double expected = conditional_variance(t1, t2, NoiseScale(1.0));
    const double brownian = brownian_conditional_variance(t1, t2, NoiseScale(1.0), 100000, base.derive(cell++)).variance;
    const double sequential =
        sequential_conditional_variance(t1, t2, NoiseScale(1.0), 100000, base.derive(cell++)).variance;
    worst = std::max({worst, std::abs(brownian - expected) / expected, std::abs(sequential - expected) / expected});
  }
  return {worst <= 0.03, "max rel err " + num(worst) + " (<= 0.03)"};
}

// 3 -------------------------------------------------------------------------

Outcome alpha_law() {
  const EndpointPair pair{Tensor::from({0.2, -0.4, 1.0, 0.5}), Tensor::from({1.0, 0.6, 0.1, -0.3})};
  const double dist2 = pair.distance_squared();
  const Index dim = pair.dim();
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
  grid.push_back(0.99);
  grid.push_back(0.995);
  const RngStream base(103, 3);
  double worst_z = 0, worst_rel = 0;
  std::uint64_t cell = 0;
  {
    const double s = 1.0;
    const NoiseScale noise(s);
    for (double t : grid) {
      const RunningMoments stab =
          sampled_target_sqnorm(ObjectiveKind::stabilized_velocity, pair, t, noise, 100000, base.derive(cell));
      const RunningMoments raw = sampled_target_sqnorm(ObjectiveKind::velocity, pair, t, noise, 100000, base.derive(cell));
      ++cell;
      worst_z = std::max(worst_z, std::abs(stab.mean() - dist2) / stab.standard_error());
      const double ratio = raw.mean() / dist2;
      const double law = 1.0 + s * s * t * static_cast<double>(dim) / ((1.0 - t) * dist2);
      worst_rel = std::max(worst_rel, std::abs(ratio - law) / law);
    }
  }
  return {worst_z <= 3.0 && worst_rel <= 0.03, "stabilized max z " + num(worst_z) +
                                                   " (<= 3), velocity ratio max rel err " + num(worst_rel) + " (<= 0.03)"};
}

// 4 -------------------------------------------------------------------------

Outcome profile_reproduction() {
  const fs::path dir = scratch("profiles");
  std::map<std::string, CsvTable> tables;
  for (const std::string kind : {"velocity", "displacement", "stabilized"}) {
    const fs::path out = dir / (kind + ".csv");
    if (cli({"profile", "--objective", kind, "--D", "1", "--distance", "1", "--s", "1", "--grid", "0.001", "--out",
             out.string()}) != 0) {
      return {false, "profile command failed for " + kind};
    }
    tables[kind] = parse_csv(read_file(out));
  }
  auto at = [](const CsvTable& table, double t) {
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      if (std::abs(table.real(r, "t") - t) < 1e-9) return table.real(r, "C");
    }
    return std::nan("");
  };
  const double c_vel = at(tables["velocity"], 0.9);
  const double c_disp = at(tables["displacement"], 0.5);
  double worst_stab = 0;
  const CsvTable& stab = tables["stabilized"];
  for (std::size_t r = 0; r < stab.rows.size(); ++r) {
    const double t = stab.real(r, "t");
    worst_stab = std::max(worst_stab, std::abs(stab.real(r, "C") - t / kProfileUpperLimit));
  }
  const bool ok = std::abs(c_vel - 1.0 / 3.0) <= 0.02 && std::abs(c_disp - 0.751) <= 0.02 && worst_stab <= 0.01;
  return {ok, "C_velocity(0.9) " + num(c_vel) + " (1/3 +- 0.02), C_displacement(0.5) " + num(c_disp) +
                  " (0.751 +- 0.02), max |C_stabilized - t/0.999| " + num(worst_stab) + " (<= 0.01)"};
}

// 5 -------------------------------------------------------------------------

Outcome sampler_exactness() {
  const auto start = std::chrono::steady_clock::now();
  const EndpointPair pair{Tensor::from({-1.0, 0.5}), Tensor::from({2.0, 1.5})};
  const VelocityField oracle = oracle_field(pair.x1);
  const RngStream base(105, 5);
  double worst_mse = 0, worst_rel = 0, worst_zero = 0;
  std::uint64_t cell = 0;
  for (std::size_t n : {1u, 2u, 4u, 16u, 64u}) {
    for (double gamma : {1.0, 5.0}) {
      const Schedule sch = shifted_schedule(n, gamma);
      for (double s : {0.0, 1.0, 2.0}) {
        const NoiseScale noise(s);
        const EndpointStatistics corrected =
            endpoint_statistics(SamplerMode::corrected, oracle, pair, sch, noise, 10000, base.derive(cell++));
        worst_mse = std::max(worst_mse, corrected.mse);
        const EndpointStatistics standard =
            endpoint_statistics(SamplerMode::standard, oracle, pair, sch, noise, 10000, base.derive(cell++));
        const double expected = s * s * sch.step_size(n - 1);
        if (expected == 0.0) {
          worst_zero = std::max(worst_zero, standard.variance);
        } else {
          worst_rel = std::max(worst_rel, std::abs(standard.variance - expected) / expected);
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {worst_mse <= 1e-20 && worst_rel <= 0.05 && worst_zero <= 1e-20 && elapsed <= 30.0,
          "corrected max MSE " + num(worst_mse) + " (<= 1e-20), standard variance max rel err " + num(worst_rel) +
              " (<= 0.05), s=0 standard variance " + num(worst_zero) + ", " + num(elapsed) + " s (<= 30)"};
}

// 6 -------------------------------------------------------------------------

Outcome gradient_correctness() {
  const RngStream base(106, 6);
  double worst = 0;
  std::uint64_t k = 0;
  std::size_t cases = 0;
  for (Index dim : {1, 2, 8}) {
    for (const std::vector<Index>& hidden : std::vector<std::vector<Index>>{{16}, {32, 32}}) {
      for (Activation act : {Activation::tanh, Activation::softplus}) {
        for (Index context : {0, 2}) {
          for (ObjectiveKind kind :
               {ObjectiveKind::displacement, ObjectiveKind::velocity, ObjectiveKind::stabilized_velocity}) {
            ModelConfig c;
            c.input_dim = dim;
            c.hidden = hidden;
            c.activation = act;
            c.context_dim = context;
            worst = std::max(worst, loss_gradient_fd_error(c, kind, NoiseScale(1.0), 64, 1e-5, base.derive(k++)));
            ++cases;
          }
        }
      }
    }
  }
  return {worst <= 1e-6, "max rel err " + num(worst) + " over " + std::to_string(cases) + " cases (<= 1e-6)"};
}

// 7 -------------------------------------------------------------------------

Outcome schedule_contract() {
  const VerifyReport fixed = verify_schedules(VerifyOptions{});
  std::size_t checked = 0;
  bool ok = fixed.passed();
  std::string why;
  const std::vector<double> gammas{1.0, 1.25, 2.0, 4.0, 7.5, 16.0, 50.0, 100.0};
  for (std::size_t n = 1; n <= 10000; n += (n < 256 ? 1 : 97)) {
    const Schedule u = uniform_schedule(n);
    for (double gamma : gammas) {
      const Schedule sch = shifted_schedule(n, gamma);
      ++checked;
      if (sch[0] != 0.0 || std::abs(sch[n] - 1.0) > std::nextafter(1.0, 2.0) - 1.0) {
        ok = false;
        why = "boundary";
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (!(sch[i + 1] > sch[i])) {
          ok = false;
          why = "monotonicity";
        }
        if (gamma > 1.0 && i + 1 < n && sch.step_size(i + 1) < sch.step_size(i)) {
          ok = false;
          why = "step growth";
        }
        if (gamma == 1.0 && sch[i] != u[i]) {
          ok = false;
          why = "uniform identity";
        }
      }
    }
  }
  return {ok, std::to_string(fixed.checks.size()) + " verify checks and " + std::to_string(checked) +
                  " (N, gamma) schedules" + (why.empty() ? "" : ", failed: " + why)};
}

// 8 -------------------------------------------------------------------------

// Lower bound on P(||u||^2 > level) for one raw-velocity training draw with
// t ~ U(0, 1 - t_clamp): ||u|| >= s sqrt(t / (1 - t)) ||eps|| - ||x1 - x0||
// and ||eps||^2 ~ chi^2_2, whose tail is exp(-c / 2).
double exceedance_lower_bound(double level, double distance, double s, double t_clamp) {
  const double need = std::pow(std::sqrt(level) + distance, 2) / (s * s);
  const double upper = 1.0 - t_clamp;
  const std::size_t cells = 200000;
  const double h = upper / static_cast<double>(cells);
  double acc = 0;
  for (std::size_t i = 0; i < cells; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * h;
    acc += std::exp(-0.5 * need * (1.0 - t) / t);
  }
  return acc * h / upper;
}

Outcome gaussian_shift_table() {
  const auto start = std::chrono::steady_clock::now();
  const TaskSpec task = TaskSpec::gaussian_shift({2.0, 0.0});
  ModelConfig model;
  model.input_dim = task.data_dim();
  const Schedule sch = shifted_schedule(16, 1.0);
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const std::size_t eval_runs = 4000;
  double stab_sum = 0, vel_sum = 0, stab_worst_ratio = 0, raw_min_max = std::numeric_limits<double>::infinity();
  std::string per_seed;
  TrainConfig probe;
  for (std::uint64_t seed : seeds) {
    std::map<ObjectiveKind, EvalReport> reports;
    for (ObjectiveKind kind : {ObjectiveKind::stabilized_velocity, ObjectiveKind::velocity}) {
      TrainConfig cfg;
      cfg.objective = kind;
      cfg.seed = seed;
      cfg.log_every = 100;
      probe = cfg;
      RngStream init(seed, 0x1417);
      TaskProvider provider(task);
      const TrainResult trained = train(make_model_state(model, init), provider, cfg);
      if (kind == ObjectiveKind::velocity) raw_min_max = std::min(raw_min_max, trained.stats.max_target_sqnorm);
      reports[kind] = evaluate(model_field(trained.model, kind), task, sch, SamplerMode::corrected, cfg.s, eval_runs,
                               RngStream(seed, 0xE7A1))
                          .report;
    }
    const EvalReport& st = reports[ObjectiveKind::stabilized_velocity];
    const EvalReport& ve = reports[ObjectiveKind::velocity];
    stab_sum += st.energy_distance;
    vel_sum += ve.energy_distance;
    stab_worst_ratio = std::max(stab_worst_ratio, st.energy_distance / st.source_energy_distance);
    per_seed += " " + num(st.energy_distance) + "/" + num(ve.energy_distance);
  }
  const double n = static_cast<double>(seeds.size());
  const double stab_mean = stab_sum / n, vel_mean = vel_sum / n;
  const double p = exceedance_lower_bound(1e3, 2.0, probe.s.value(), probe.t_clamp);
  const double draws = static_cast<double>(probe.steps * probe.batch_size);
  const double confidence = 1.0 - std::exp(draws * std::log1p(-p));
  const double elapsed = seconds_since(start);
  const bool ok = stab_worst_ratio <= 0.1 && stab_mean <= vel_mean && raw_min_max > 1e3 && confidence >= 0.99 &&
                  elapsed <= 300.0;
  return {ok, "ED stabilized/source max " + num(stab_worst_ratio) + " (<= 0.1); mean ED stabilized " + num(stab_mean) +
                  " vs velocity " + num(vel_mean) + " over seeds 1-5 (stab/vel:" + per_seed +
                  "); raw max target sqnorm min over seeds " + num(raw_min_max) + " (> 1e3, P >= " + num(confidence) +
                  "); " + num(elapsed) + " s (<= 300)"};
}

// 9 -------------------------------------------------------------------------

Outcome noise_sweep() {
  const fs::path dir = scratch("sweep");
  const int rc = cli({"ablate", "--axis", "noise_scale", "--values", "0,0.5,1,2,4", "--seed", "9", "--runs", "1000",
                      "--out-dir", dir.string()});
  if (rc != 0) return {false, "ablate exited with " + std::to_string(rc)};
  const CsvTable table = parse_csv(read_file(dir / "summary.csv"));
  if (table.rows.size() != 5) return {false, "summary has " + std::to_string(table.rows.size()) + " rows"};
  bool all_ok = true;
  for (const auto& row : table.rows) all_ok = all_ok && row[table.column("status")] == "ok";
  const double alpha0 = table.real(0, "max_alpha_sq");
  const double spread0 = table.real(0, "endpoint_seed_spread");

  // s = 0 training targets are the constant x1 - x0 with unit weight.
  TrainConfig cfg;
  cfg.s = NoiseScale(0.0);
  cfg.steps = 50;
  cfg.seed = 9;
  double worst_target = 0, worst_alpha = 0;
  ModelConfig model;
  model.input_dim = 2;
  RngStream init(9, 0x1417);
  ModelState state = make_model_state(model, init);
  TaskProvider provider(TaskSpec::gaussian_shift({2.0, 0.0}));
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    RngStream data(cfg.seed, kDataStream);
    RngStream batch_rng = data.derive(k);
    const PairBatch batch = provider.next_batch(batch_rng, cfg.batch_size);
    train_step(state, batch, cfg, RngStream(cfg.seed, kNoiseStream).derive(k), k,
               [&](const EndpointPair& pair, const BridgeSample&, const WeightedTarget& target, const Tensor&) {
                 const Tensor delta = pair.x1.with_values(pair.x1.vec() - pair.x0.vec());
                 worst_target = std::max(worst_target, (target.target.vec() - delta.vec()).cwiseAbs().maxCoeff());
                 worst_alpha = std::max(worst_alpha, std::abs(1.0 / target.weight - 1.0));
               });
  }
  const bool ok = all_ok && alpha0 == 1.0 && spread0 == 0.0 && worst_target <= 1e-9 && worst_alpha == 0.0;
  return {ok, "5 rows " + std::string(all_ok ? "ok" : "with failures") + "; s=0 max alpha^2 " + num(alpha0) +
                  ", sampler seed spread " + num(spread0) + ", target deviation from x1-x0 " + num(worst_target) + " (<= 1e-9)"};
}

// 10 ------------------------------------------------------------------------

std::string comparable_bytes(const fs::path& file) {
  const std::string bytes = read_file(file);
  if (file.filename() == "manifest.json") {
    nlohmann::json j = nlohmann::json::parse(bytes);
    for (const std::string& key : kWallClockManifestKeys) j.erase(key);
    return j.dump();
  }
  if (file.filename() == "stats.csv") {
    CsvTable t = parse_csv(bytes);
    const std::size_t ms = t.column("ms");
    std::string out;
    for (auto& row : t.rows) {
      row.erase(row.begin() + static_cast<std::ptrdiff_t>(ms));
      for (const auto& c : row) out += c + ",";
      out += "\n";
    }
    return out;
  }
  return bytes;
}

Outcome determinism() {
  std::vector<fs::path> runs;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path dir = scratch("det" + std::to_string(rep));
    const std::string d = dir.string();
    int rc = cli({"verify", "--suite", "all", "--out", d + "/verify.json"});
    rc |= cli({"train", "--seed", "11", "--steps", "300", "--debug", "--out-dir", d + "/train"});
    rc |= cli({"sample", "--params", d + "/train/params.bin", "--seed", "12", "--runs", "200", "--trajectories", "3",
               "--out-dir", d + "/sample"});
    rc |= cli({"ablate", "--axis", "gamma", "--values", "1,5", "--seed", "13", "--steps", "200", "--runs", "100",
               "--out-dir", d + "/ablate"});
    if (rc != 0) return {false, "a command failed on repetition " + std::to_string(rep)};
    runs.push_back(dir);
  }
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(runs[0])) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), runs[0]);
    const fs::path other = runs[1] / rel;
    if (!fs::exists(other)) return {false, rel.string() + " missing in the second run"};
    if (comparable_bytes(entry.path()) != comparable_bytes(other)) return {false, rel.string() + " differs between runs"};
    ++files;
  }
  return {files >= 10, std::to_string(files) +
                           " artifacts identical (manifest timestamps and the stats ms column excluded)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"bridge marginal statistics", bridge_statistics},
      {"conditional variance", check_conditional_variance},
      {"normalization law", alpha_law},
      {"loss-contribution profiles", profile_reproduction},
      {"sampler exactness", sampler_exactness},
      {"gradient correctness", gradient_correctness},
      {"schedule contract", schedule_contract},
      {"gaussian_shift objective comparison", gaussian_shift_table},
      {"noise-scale sweep", noise_sweep},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.passed) ++failures;
    std::cout << (o.passed ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
