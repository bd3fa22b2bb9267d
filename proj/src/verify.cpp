#include "bbridge/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bbridge/bridge.hpp"
#include "bbridge/sampler.hpp"
#include "bbridge/schedules.hpp"

namespace bbridge {

std::string_view to_string(VerifySuite suite) {
  switch (suite) {
    case VerifySuite::bridge:
      return "bridge";
    case VerifySuite::sampler:
      return "sampler";
    case VerifySuite::objectives:
      return "objectives";
    case VerifySuite::schedules:
      return "schedules";
    case VerifySuite::all:
      return "all";
  }
  return "unknown";
}

VerifySuite parse_verify_suite(std::string_view name) {
  for (VerifySuite s : {VerifySuite::bridge, VerifySuite::sampler, VerifySuite::objectives, VerifySuite::schedules,
                        VerifySuite::all}) {
    if (name == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown verify suite '" + std::string(name) + "'");
}

nlohmann::json to_json(const VerifyOptions& o) {
  return {{"seed", o.seed},
          {"mc", o.mc},
          {"profile_mc", o.profile_mc},
          {"runs", o.runs},
          {"sigma_bound", o.sigma_bound},
          {"variance_rel_tol", o.variance_rel_tol},
          {"endpoint_rel_tol", o.endpoint_rel_tol},
          {"exactness_mse", o.exactness_mse},
          {"profile_abs_tol", o.profile_abs_tol},
          {"stabilized_profile_tol", o.stabilized_profile_tol},
          {"gradient_rel_tol", o.gradient_rel_tol}};
}

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

nlohmann::json VerifyReport::to_json(VerifySuite suite, const VerifyOptions& options) const {
  nlohmann::json list = nlohmann::json::array();
  for (const Check& c : checks) {
    list.push_back({{"suite", c.suite}, {"name", c.name}, {"measured", c.measured}, {"bound", c.bound},
                    {"passed", c.passed}});
  }
  return {{"suite", std::string(bbridge::to_string(suite))},
          {"options", bbridge::to_json(options)},
          {"checks", list},
          {"passed", passed()}};
}

namespace {

std::string fmt(double x) {
  std::ostringstream ss;
  ss << x;
  return ss.str();
}

void add_le(VerifyReport& r, const std::string& suite, const std::string& name, double measured, double bound) {
  r.checks.push_back({suite, name, measured, bound, measured <= bound});
}

void append(VerifyReport& into, const VerifyReport& from) {
  into.checks.insert(into.checks.end(), from.checks.begin(), from.checks.end());
}

EndpointPair reference_pair() {
  return {Tensor::from({0.3, -1.2, 2.0}), Tensor::from({1.5, 0.4, -0.7})};
}

// Centered second moments of two equally long series.
struct Regression {
  double var_a = 0, var_b = 0, cov = 0;
  std::size_t n = 0;
};

Regression regress(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  CompensatedSum<double> sa, sb;
  for (std::size_t i = 0; i < n; ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double ma = sa.value() / static_cast<double>(n);
  const double mb = sb.value() / static_cast<double>(n);
  CompensatedSum<double> aa, bb, ab;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    aa += da * da;
    bb += db * db;
    ab += da * db;
  }
  const double d = static_cast<double>(n - 1);
  return {aa.value() / d, bb.value() / d, ab.value() / d, n};
}

ConditionalEstimate conditional_from(const Regression& g) {
  ConditionalEstimate e;
  e.slope = g.cov / g.var_a;
  const double n = static_cast<double>(g.n);
  // residual variance with n - 2 degrees of freedom
  e.variance = (g.var_b - g.cov * g.cov / g.var_a) * (n - 1.0) / (n - 2.0);
  e.slope_se = std::sqrt(e.variance / ((n - 1.0) * g.var_a));
  return e;
}

}  // namespace

MomentCheck bridge_marginal_moments(const EndpointPair& pair, double t, NoiseScale s, std::size_t draws,
                                    RngStream rng) {
  const Index dim = pair.dim();
  std::vector<RunningMoments> m(static_cast<std::size_t>(dim));
  Tensor eps(pair.x0.shape());
  for (std::size_t i = 0; i < draws; ++i) {
    fill_gaussian(rng, eps.vec());
    const BridgeSample b = sample_state(pair, t, eps, s);
    for (Index j = 0; j < dim; ++j) m[static_cast<std::size_t>(j)].add(b.state[j]);
  }
  const Tensor mean = interpolate(pair, t);
  const double var = marginal_variance(t, s);
  const double se = std::sqrt(var / static_cast<double>(draws));
  MomentCheck out;
  for (Index j = 0; j < dim; ++j) {
    const RunningMoments& mj = m[static_cast<std::size_t>(j)];
    const double dev = std::abs(mj.mean() - mean[j]);
    out.max_mean_z = std::max(out.max_mean_z, se > 0 ? dev / se : (dev == 0 ? 0.0 : std::numeric_limits<double>::infinity()));
    out.max_variance_rel = std::max(out.max_variance_rel, std::abs(mj.variance() - var) / var);
  }
  return out;
}

ConditionalEstimate brownian_conditional_variance(double t1, double t2, NoiseScale s, std::size_t paths,
                                                  RngStream rng) {
  if (!(0.0 < t1 && t1 < t2 && t2 < 1.0)) throw std::domain_error("need 0 < t1 < t2 < 1");
  std::vector<double> a(paths), b(paths);
  for (std::size_t i = 0; i < paths; ++i) {
    const auto z01 = rng.next_normal_pair();
    const double z2 = rng.normal();
    const double w1 = std::sqrt(t1) * z01[0];
    const double w2 = w1 + std::sqrt(t2 - t1) * z01[1];
    const double w_end = w2 + std::sqrt(1.0 - t2) * z2;
    a[i] = s.value() * (w1 - t1 * w_end);
    b[i] = s.value() * (w2 - t2 * w_end);
  }
  return conditional_from(regress(a, b));
}

ConditionalEstimate sequential_conditional_variance(double t1, double t2, NoiseScale s, std::size_t paths,
                                                    RngStream rng) {
  const EndpointPair pair{Tensor::from({0.0}), Tensor::from({0.0})};
  std::vector<double> a(paths), b(paths);
  for (std::size_t i = 0; i < paths; ++i) {
    const TwoTimeDraw d = sample_two_times(pair, t1, t2, s, rng);
    a[i] = d.first[0];
    b[i] = d.second[0];
  }
  return conditional_from(regress(a, b));
}

double loss_gradient_fd_error(const ModelConfig& config, ObjectiveKind kind, NoiseScale s, std::size_t probes,
                              double h, RngStream rng) {
  Parameters params = init_parameters(config, rng);
  Vector<double> jitter(params.values.size());
  fill_gaussian(rng, jitter);
  params.values += 0.3 * jitter;

  const Shape shape{config.input_dim};
  const EndpointPair pair{gaussian(rng, shape), gaussian(rng, shape)};
  const double t = 0.05 + 0.9 * rng.uniform();
  const BridgeSample sample = sample_state(pair, t, gaussian(rng, shape), s);
  Tensor context;
  const Tensor* ctx = nullptr;
  if (config.context_dim > 0) {
    context = gaussian(rng, {config.context_dim});
    ctx = &context;
  }
  const WeightedTarget target = regression_target(kind, pair, sample, s);

  auto objective = [&](const Parameters& p) { return loss(target, forward(p, config, sample.state, t, ctx)); };
  const Tensor pred = forward(params, config, sample.state, t, ctx);
  const Gradients g = backward(params, config, sample.state, t, ctx, loss_gradient(target, pred));

  const Index count = params.values.size();
  const auto n = std::min<std::size_t>(probes, static_cast<std::size_t>(count));
  Vector<double> analytic(static_cast<Index>(n)), numeric(static_cast<Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    Index idx = static_cast<Index>(k);
    if (static_cast<std::size_t>(count) > probes) {
      idx = static_cast<Index>(rng.uniform() * static_cast<double>(count));
      idx = std::min(idx, count - 1);
    }
    Parameters plus = params, minus = params;
    plus.values[idx] += h;
    minus.values[idx] -= h;
    numeric[static_cast<Index>(k)] = (objective(plus) - objective(minus)) / (2.0 * h);
    analytic[static_cast<Index>(k)] = g.params[idx];
  }
  const double scale = std::max(analytic.norm(), numeric.norm());
  return scale > 0 ? (analytic - numeric).norm() / scale : 0.0;
}

VerifyReport verify_bridge(const VerifyOptions& o) {
  VerifyReport r;
  const RngStream base(o.seed, 0xB1D6E);
  const EndpointPair pair = reference_pair();
  std::uint64_t cell = 0;
  for (double t : {0.1, 0.5, 0.9}) {
    for (double s : {0.5, 1.0, 2.0}) {
      const MomentCheck m = bridge_marginal_moments(pair, t, NoiseScale(s), o.mc, base.derive(cell++));
      const std::string tag = "t=" + fmt(t) + " s=" + fmt(s);
      add_le(r, "bridge", "marginal mean z-score " + tag, m.max_mean_z, o.sigma_bound);
      add_le(r, "bridge", "marginal variance rel err " + tag, m.max_variance_rel, o.variance_rel_tol);
    }
  }
  for (auto [t1, t2] : {std::pair{0.25, 0.5}, std::pair{0.5, 0.75}, std::pair{0.1, 0.9}}) {
    for (double s : {1.0, 2.0}) {
      const NoiseScale ns(s);
      const double exact = conditional_variance(t1, t2, ns);
      const std::string tag = "t1=" + fmt(t1) + " t2=" + fmt(t2) + " s=" + fmt(s);
      const ConditionalEstimate bm = brownian_conditional_variance(t1, t2, ns, o.mc, base.derive(cell++));
      add_le(r, "bridge", "conditional variance (Brownian paths) rel err " + tag, std::abs(bm.variance - exact) / exact,
             o.variance_rel_tol);
      const ConditionalEstimate sq = sequential_conditional_variance(t1, t2, ns, o.mc, base.derive(cell++));
      add_le(r, "bridge", "conditional variance (sequential sampler) rel err " + tag,
             std::abs(sq.variance - exact) / exact, o.variance_rel_tol);
      const double slope = (1.0 - t2) / (1.0 - t1);
      add_le(r, "bridge", "conditional slope z " + tag, std::abs(bm.slope - slope) / bm.slope_se, o.sigma_bound);
    }
  }
  // Endpoint pinning and the target identities.
  add_le(r, "bridge", "marginal variance at t=0 and t=1",
         marginal_variance(0.0, NoiseScale(1.0)) + marginal_variance(1.0, NoiseScale(1.0)), 0.0);
  {
    RngStream rng = base.derive(cell++);
    double worst_expansion = 0, worst_ratio = 0;
    for (int i = 0; i < 1000; ++i) {
      const EndpointPair p{gaussian(rng, {4}), gaussian(rng, {4})};
      const double t = 0.9 * rng.uniform();
      const NoiseScale s(2.0 * rng.uniform());
      const BridgeSample b = sample_state(p, t, gaussian(rng, {4}), s);
      const Tensor u = velocity_target(p, b);
      const Tensor e = velocity_target_expanded(p, b, s);
      const Tensor d = displacement_target(p, b);
      worst_expansion = std::max(worst_expansion, (u.vec() - e.vec()).cwiseAbs().maxCoeff() /
                                                      std::max(1.0, e.vec().cwiseAbs().maxCoeff()));
      worst_ratio = std::max(worst_ratio, (d.vec() - (1.0 - t) * u.vec()).cwiseAbs().maxCoeff() /
                                              std::max(1.0, d.vec().cwiseAbs().maxCoeff()));
    }
    add_le(r, "bridge", "velocity expansion identity, t <= 0.9 (scaled max abs)", worst_expansion, 1e-12);
    add_le(r, "bridge", "displacement = (1-t) velocity (scaled max abs)", worst_ratio, 1e-12);
  }
  return r;
}

VerifyReport verify_objectives(const VerifyOptions& o) {
  VerifyReport r;
  const RngStream base(o.seed, 0x0B1EC7);
  std::uint64_t cell = 0;

  // alpha law: E||u/alpha||^2 = ||x1-x0||^2 and E||u||^2 / ||x1-x0||^2 = alpha^2.
  const EndpointPair pair{Tensor::from({0.2, -0.4, 1.0, 0.5}), Tensor::from({1.0, 0.6, 0.1, -0.3})};
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
  grid.push_back(0.995);
  const double dist2 = pair.distance_squared();
  for (double s : {0.5, 1.0, 2.0}) {
    const NoiseScale ns(s);
    double worst_z = 0, worst_rel = 0;
    for (double t : grid) {
      const RunningMoments stab =
          sampled_target_sqnorm(ObjectiveKind::stabilized_velocity, pair, t, ns, o.profile_mc, base.derive(cell));
      const RunningMoments raw =
          sampled_target_sqnorm(ObjectiveKind::velocity, pair, t, ns, o.profile_mc, base.derive(cell));
      ++cell;
      worst_z = std::max(worst_z, std::abs(stab.mean() - dist2) / stab.standard_error());
      const double a2 = alpha_factor(pair, t, ns).alpha_squared;
      worst_rel = std::max(worst_rel, std::abs(raw.mean() / dist2 - a2) / a2);
    }
    add_le(r, "objectives", "stabilized target magnitude z-score s=" + fmt(s), worst_z, o.sigma_bound);
    add_le(r, "objectives", "raw velocity magnitude vs alpha^2 rel err s=" + fmt(s), worst_rel, o.variance_rel_tol);
  }

  // Loss-contribution profiles (D = 1, ||x1-x0||^2 = 1, s = 1).
  const EndpointPair unit{Tensor::from({0.0}), Tensor::from({1.0})};
  std::vector<double> fine = linear_grid(0.001);
  std::vector<double> mixed;
  for (int i = 0; i < 90; ++i) mixed.push_back(0.01 * i);
  for (int i = 900; i <= 999; ++i) mixed.push_back(0.001 * i);
  auto value_at = [](const std::vector<ProfilePoint>& prof, double t) {
    auto best = prof.front();
    for (const ProfilePoint& p : prof) {
      if (std::abs(p.t - t) < std::abs(best.t - t)) best = p;
    }
    return best.C;
  };
  for (ProfileMethod method : {ProfileMethod::closed_form, ProfileMethod::monte_carlo}) {
    const bool mc = method == ProfileMethod::monte_carlo;
    const std::string tag = mc ? " (monte-carlo)" : " (closed form)";
    const std::vector<double>& g = mc ? mixed : fine;
    const auto vel = target_profile(ObjectiveKind::velocity, unit, NoiseScale(1.0), g, method, o.profile_mc / 4,
                                    base.derive(cell++));
    add_le(r, "objectives", "C_velocity(0.9) - 1/3" + tag, std::abs(value_at(vel, 0.9) - 1.0 / 3.0), o.profile_abs_tol);
    const auto disp = target_profile(ObjectiveKind::displacement, unit, NoiseScale(1.0), g, method,
                                     o.profile_mc / 4, base.derive(cell++));
    add_le(r, "objectives", "C_displacement(0.5) - 0.375/0.4995" + tag,
           std::abs(value_at(disp, 0.5) - 0.375 / 0.4995), o.profile_abs_tol);
    const auto stab = target_profile(ObjectiveKind::stabilized_velocity, unit, NoiseScale(1.0), g, method,
                                     o.profile_mc / 4, base.derive(cell++));
    double worst = 0;
    for (const ProfilePoint& p : stab) worst = std::max(worst, std::abs(p.C - p.t / kProfileUpperLimit));
    add_le(r, "objectives", "max |C_stabilized(t) - t/0.999|" + tag, worst, o.stabilized_profile_tol);
  }

  // Divergence of the raw target and decay of the displacement target.
  {
    double worst_div = std::numeric_limits<double>::infinity();
    double worst_decay = -std::numeric_limits<double>::infinity();
    for (Index dim : {1, 4, 16}) {
      for (double s : {0.5, 1.0, 2.0}) {
        for (double d2 : {0.1, 1.0, 4.0}) {
          const NoiseScale ns(s);
          if (static_cast<double>(dim) * s * s >= d2) {
            const double s0 = expected_target_sqnorm(ObjectiveKind::velocity, d2, dim, 0.0, ns);
            for (double t = 0.5; t < 0.999; t += 0.01) {
              const double ratio = expected_target_sqnorm(ObjectiveKind::velocity, d2, dim, t, ns) / s0;
              worst_div = std::min(worst_div, ratio * (1.0 - t) / 0.5);
            }
          }
          for (double t = 0.0; t < 1.0; t += 0.01) {
            const double bound = (1.0 - t) * (d2 + s * s * static_cast<double>(dim));
            worst_decay = std::max(worst_decay, expected_target_sqnorm(ObjectiveKind::displacement, d2, dim, t, ns) - bound);
          }
        }
      }
    }
    r.checks.push_back({"objectives", "raw velocity growth S(t)/S(0) * (1-t) / 0.5 (min, >= 1)", worst_div, 1.0,
                        worst_div >= 1.0});
    add_le(r, "objectives", "displacement S(t) - (1-t)(|x1-x0|^2 + s^2 D) (max, <= 0)", worst_decay, 0.0);
  }

  // Reverse mode through the model and all three losses.
  {
    double worst = 0;
    std::uint64_t k = 0;
    for (Index dim : {1, 2, 8}) {
      for (const std::vector<Index>& hidden : {std::vector<Index>{16}, std::vector<Index>{32, 32}}) {
        for (Activation act : {Activation::tanh, Activation::softplus}) {
          for (ObjectiveKind kind :
               {ObjectiveKind::displacement, ObjectiveKind::velocity, ObjectiveKind::stabilized_velocity}) {
            ModelConfig c;
            c.input_dim = dim;
            c.hidden = hidden;
            c.activation = act;
            c.context_dim = (k % 2 == 0) ? 0 : 2;
            worst = std::max(worst, loss_gradient_fd_error(c, kind, NoiseScale(1.0), 64, 1e-5,
                                                           base.derive(1000 + k++)));
          }
        }
      }
    }
    add_le(r, "objectives", "loss gradient vs central differences (max rel err)", worst, o.gradient_rel_tol);
  }
  return r;
}

VerifyReport verify_schedules(const VerifyOptions&) {
  VerifyReport r;
  double worst_boundary = 0;
  bool monotone = true, widening = true, uniform_match = true, densified = true;
  for (std::size_t n : {1u, 2u, 3u, 4u, 7u, 16u, 64u, 100u, 1000u, 10000u}) {
    const Schedule u = uniform_schedule(n);
    for (double gamma : {1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 37.5, 100.0}) {
      const Schedule sch = shifted_schedule(n, gamma);
      worst_boundary = std::max({worst_boundary, std::abs(sch[0]), std::abs(sch[n] - 1.0)});
      for (std::size_t i = 0; i < n; ++i) {
        if (!(sch.step_size(i) > 0.0)) monotone = false;
        if (gamma > 1.0 && i + 1 < n && sch.step_size(i + 1) < sch.step_size(i)) widening = false;
      }
      if (gamma > 1.0 && n > 1 && !(sch[1] < 1.0 / static_cast<double>(n))) densified = false;
      if (gamma == 1.0) {
        for (std::size_t i = 0; i <= n; ++i) {
          if (sch[i] != u[i]) uniform_match = false;
        }
      }
    }
  }
  add_le(r, "schedules", "boundary error |t_0| and |t_N - 1|", worst_boundary,
         std::numeric_limits<double>::epsilon());
  r.checks.push_back({"schedules", "strictly increasing", monotone ? 1.0 : 0.0, 1.0, monotone});
  r.checks.push_back({"schedules", "step sizes non-decreasing for gamma > 1", widening ? 1.0 : 0.0, 1.0, widening});
  r.checks.push_back({"schedules", "first step below 1/N for gamma > 1", densified ? 1.0 : 0.0, 1.0, densified});
  r.checks.push_back({"schedules", "gamma = 1 bitwise equals uniform", uniform_match ? 1.0 : 0.0, 1.0, uniform_match});
  const Schedule g5 = shifted_schedule(4, 5.0);
  const double expected[5] = {0.0, 1.0 / 16.0, 1.0 / 6.0, 3.0 / 8.0, 1.0};
  double worst = 0;
  for (int i = 0; i < 5; ++i) worst = std::max(worst, std::abs(g5[static_cast<std::size_t>(i)] - expected[i]));
  add_le(r, "schedules", "gamma=5 N=4 reference points", worst, 1e-15);
  return r;
}

VerifyReport verify_sampler(const VerifyOptions& o) {
  VerifyReport r;
  const RngStream base(o.seed, 0x5A3B1E);
  std::uint64_t cell = 0;
  const EndpointPair pair{Tensor::from({-1.0, 0.5}), Tensor::from({2.0, 1.5})};
  const VelocityField oracle = oracle_field(pair.x1);

  double worst_mse = 0;
  for (std::size_t n : {1u, 2u, 4u, 16u, 64u}) {
    for (double gamma : {1.0, 5.0}) {
      const Schedule sch = shifted_schedule(n, gamma);
      for (double s : {0.0, 1.0, 2.0}) {
        const std::string tag = "N=" + std::to_string(n) + " gamma=" + fmt(gamma) + " s=" + fmt(s);
        const EndpointStatistics corr =
            endpoint_statistics(SamplerMode::corrected, oracle, pair, sch, NoiseScale(s), 64, base.derive(cell++));
        worst_mse = std::max(worst_mse, corr.mse);
        const EndpointStatistics stdm =
            endpoint_statistics(SamplerMode::standard, oracle, pair, sch, NoiseScale(s), o.runs, base.derive(cell++));
        const double expected = s * s * sch.step_size(n - 1);
        if (expected == 0.0) {
          add_le(r, "sampler", "standard endpoint variance (s=0, exact) " + tag, stdm.variance, o.exactness_mse);
        } else {
          add_le(r, "sampler", "standard endpoint variance rel err vs s^2 dt_last " + tag,
                 std::abs(stdm.variance - expected) / expected, o.endpoint_rel_tol);
        }
      }
    }
  }
  add_le(r, "sampler", "corrected sampler + oracle field endpoint mse (max)", worst_mse, o.exactness_mse);

  // Telescoping variance: bridge to 0 from 0 reproduces s^2 t (1 - t) at every grid point.
  for (double gamma : {1.0, 5.0}) {
    for (double s : {1.0, 2.0}) {
      const Schedule sch = shifted_schedule(8, gamma);
      const NoiseScale ns(s);
      const Tensor zero = Tensor::from({0.0});
      const VelocityField toward_zero = oracle_field(zero);
      std::vector<RunningMoments> m(sch.steps() + 1);
      const RngStream runs_rng = base.derive(cell++);
      for (std::size_t run = 0; run < o.mc; ++run) {
        RngStream rr = runs_rng.derive(run);
        const auto traj = sample(SamplerMode::corrected, zero, toward_zero, sch, ns, rr);
        for (std::size_t k = 0; k < traj.size(); ++k) m[k].add(traj[k][0]);
      }
      double worst_rel = 0;
      for (std::size_t k = 1; k < sch.steps(); ++k) {
        const double expected = marginal_variance(sch[k], ns);
        worst_rel = std::max(worst_rel, std::abs(m[k].variance() - expected) / expected);
      }
      add_le(r, "sampler", "corrected state variance vs s^2 t(1-t) (max rel err) gamma=" + fmt(gamma) + " s=" + fmt(s),
             worst_rel, o.variance_rel_tol);
    }
  }

  // Corrected and standard noise amplitudes agree as dt -> 0 away from t = 1.
  {
    const Schedule fine = uniform_schedule(10000);
    double worst = 0;
    for (std::size_t k = 0; k < 5000; ++k) {
      const double a = make_step(SamplerMode::corrected, fine, k, NoiseScale(1.0)).eta;
      const double b = make_step(SamplerMode::standard, fine, k, NoiseScale(1.0)).eta;
      worst = std::max(worst, 1.0 - a / b);
    }
    add_le(r, "sampler", "1 - eta_corrected/eta_standard for t <= 0.5 at N=10^4", worst, 1e-3);
  }

  // Identical seeds give identical trajectories.
  {
    const Schedule sch = shifted_schedule(16, 5.0);
    RngStream a = base.derive(cell), b = base.derive(cell);
    ++cell;
    const auto ta = sample(SamplerMode::corrected, pair.x0, zero_field(), sch, NoiseScale(1.0), a);
    const auto tb = sample(SamplerMode::corrected, pair.x0, zero_field(), sch, NoiseScale(1.0), b);
    const bool same = ta == tb;
    r.checks.push_back({"sampler", "bitwise-identical trajectories for identical seeds", same ? 1.0 : 0.0, 1.0, same});
  }
  return r;
}

VerifyReport run_verify(VerifySuite suite, const VerifyOptions& o) {
  VerifyReport r;
  if (suite == VerifySuite::bridge || suite == VerifySuite::all) append(r, verify_bridge(o));
  if (suite == VerifySuite::objectives || suite == VerifySuite::all) append(r, verify_objectives(o));
  if (suite == VerifySuite::schedules || suite == VerifySuite::all) append(r, verify_schedules(o));
  if (suite == VerifySuite::sampler || suite == VerifySuite::all) append(r, verify_sampler(o));
  return r;
}

}  // namespace bbridge
