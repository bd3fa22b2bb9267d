#include "bbridge/sampler.hpp"

#include <cmath>

namespace bbridge {

VelocityField oracle_field(Tensor x1) {
  return [x1 = std::move(x1)](const Tensor& x, double t, const Tensor*) {
    return x.with_values((x1.vec() - x.vec()) / (1.0 - t));
  };
}

VelocityField zero_field() {
  return [](const Tensor& x, double, const Tensor*) { return Tensor::zeros_like(x); };
}

std::string_view to_string(SamplerMode mode) { return mode == SamplerMode::standard ? "standard" : "corrected"; }

SamplerMode parse_sampler_mode(std::string_view name) {
  if (name == "standard") return SamplerMode::standard;
  if (name == "corrected") return SamplerMode::corrected;
  throw std::invalid_argument("unknown sampler mode '" + std::string(name) + "'");
}

SamplerStep make_step(SamplerMode mode, const Schedule& schedule, std::size_t k, NoiseScale s) {
  if (k >= schedule.steps()) throw std::out_of_range("make_step: step index past schedule end");
  SamplerStep st;
  st.k = k;
  st.t_from = schedule[k];
  st.t_to = schedule[k + 1];
  st.dt = st.t_to - st.t_from;
  if (mode == SamplerMode::corrected) {
    st.eta = s.value() * std::sqrt(st.dt * (1.0 - st.t_to) / (1.0 - st.t_from));
  } else {
    st.eta = s.value() * std::sqrt(st.dt);
  }
  return st;
}

Tensor step(const Tensor& state, const VelocityField& field, const SamplerStep& s, const Tensor& eps,
            const Tensor* context) {
  if (!(s.t_from < 1.0)) throw IntegrationError(s.k, "step starts at t >= 1");
  const Tensor v = field(state, s.t_from, context);
  if (!v.same_shape(state)) throw IntegrationError(s.k, "velocity field changed the state shape");
  if (!v.all_finite()) throw IntegrationError(s.k, "non-finite velocity at t=" + std::to_string(s.t_from));
  Tensor next = state.with_values(state.vec() + s.dt * v.vec());
  if (s.eta != 0.0) {
    require_same_shape(eps, state, "sampler step noise");
    next.vec() += s.eta * eps.vec();
  }
  if (!next.all_finite()) throw IntegrationError(s.k, "non-finite state");
  return next;
}

namespace {

template <typename Visit>
Tensor integrate(SamplerMode mode, const Tensor& x0, const VelocityField& field, const Schedule& schedule,
                 NoiseScale s, RngStream& rng, const Tensor* context, Visit&& visit) {
  Tensor x = x0;
  Tensor eps(x0.shape());
  for (std::size_t k = 0; k < schedule.steps(); ++k) {
    const SamplerStep st = make_step(mode, schedule, k, s);
    if (st.eta != 0.0) fill_gaussian(rng, eps.vec());
    x = step(x, field, st, eps, context);
    visit(x);
  }
  return x;
}

}  // namespace

std::vector<Tensor> sample(SamplerMode mode, const Tensor& x0, const VelocityField& field, const Schedule& schedule,
                           NoiseScale s, RngStream& rng, const Tensor* context) {
  std::vector<Tensor> trajectory;
  trajectory.reserve(schedule.steps() + 1);
  trajectory.push_back(x0);
  integrate(mode, x0, field, schedule, s, rng, context, [&](const Tensor& x) { trajectory.push_back(x); });
  return trajectory;
}

Tensor sample_final(SamplerMode mode, const Tensor& x0, const VelocityField& field, const Schedule& schedule,
                    NoiseScale s, RngStream& rng, const Tensor* context) {
  return integrate(mode, x0, field, schedule, s, rng, context, [](const Tensor&) {});
}

EndpointStatistics endpoint_statistics(SamplerMode mode, const VelocityField& field, const EndpointPair& pair,
                                       const Schedule& schedule, NoiseScale s, std::size_t runs,
                                       const RngStream& rng) {
  if (runs < 2) throw std::invalid_argument("endpoint_statistics needs at least two runs");
  const Index dim = pair.dim();
  std::vector<RunningMoments> per_coord(static_cast<std::size_t>(dim));
  CompensatedSum<double> sq_err;
  for (std::size_t r = 0; r < runs; ++r) {
    RngStream run_rng = rng.derive(r);
    const Tensor x = sample_final(mode, pair.x0, field, schedule, s, run_rng);
    for (Index i = 0; i < dim; ++i) {
      per_coord[static_cast<std::size_t>(i)].add(x[i]);
      const double e = x[i] - pair.x1[i];
      sq_err += e * e;
    }
  }
  EndpointStatistics out;
  out.runs = runs;
  CompensatedSum<double> bias, var;
  for (Index i = 0; i < dim; ++i) {
    const RunningMoments& m = per_coord[static_cast<std::size_t>(i)];
    bias += m.mean() - pair.x1[i];
    var += m.variance();
  }
  const double d = static_cast<double>(dim);
  out.mean_error = bias.value() / d;
  out.variance = var.value() / d;
  out.mse = sq_err.value() / (d * static_cast<double>(runs));
  return out;
}

}  // namespace bbridge
