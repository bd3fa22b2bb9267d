#include <gtest/gtest.h>

#include <filesystem>

#include "bbridge/objectives.hpp"
#include "bbridge/trainer.hpp"
#include "bbridge/velocity_model.hpp"
#include "bbridge/verify.hpp"

using namespace bbridge;

namespace {

ModelConfig small_config(Index dim = 3, Index context = 0) {
  ModelConfig c;
  c.input_dim = dim;
  c.hidden = {8, 6};
  c.time_features = 4;
  c.context_dim = context;
  return c;
}

Parameters random_parameters(const ModelConfig& c, std::uint64_t seed) {
  RngStream rng(seed);
  Parameters p{Vector<double>(parameter_count(c))};
  fill_gaussian(rng, p.values);
  p.values *= 0.5;
  return p;
}

}  // namespace

TEST(Layout, CountsWeightsAndBiases) {
  const ModelConfig c = small_config();
  // feature width 3 + 4 = 7: 7*8+8 + 8*6+6 + 6*3+3
  EXPECT_EQ(c.feature_dim(), 7);
  EXPECT_EQ(parameter_count(c), 7 * 8 + 8 + 8 * 6 + 6 + 6 * 3 + 3);
}

TEST(Init, OutputIsZeroEverywhere) {
  const ModelConfig c = small_config(3, 2);
  RngStream rng(1);
  const Parameters p = init_parameters(c, rng);
  RngStream probe(2);
  for (int i = 0; i < 20; ++i) {
    const Tensor x = gaussian(probe, {3});
    const Tensor ctx = gaussian(probe, {2});
    EXPECT_EQ(squared_norm(forward(p, c, x, probe.uniform(), &ctx)), 0.0);
  }
}

TEST(Init, SameSeedSameParameters) {
  RngStream a(9), b(9);
  EXPECT_EQ(init_parameters(small_config(), a).values, init_parameters(small_config(), b).values);
}

TEST(Init, InitialStabilizedLossIsMeanTargetNorm) {
  const ModelConfig c = small_config(2);
  RngStream rng(4);
  const Parameters p = init_parameters(c, rng);
  double mean_loss = 0, mean_norm = 0;
  const int n = 32;
  for (int i = 0; i < n; ++i) {
    const EndpointPair pair{gaussian(rng, {2}), gaussian(rng, {2})};
    const double t = 0.99 * rng.uniform();
    const BridgeSample b = sample_state(pair, t, gaussian(rng, {2}), NoiseScale(1.0));
    mean_loss += loss(ObjectiveKind::stabilized_velocity, forward(p, c, b.state, t), pair, b, NoiseScale(1.0)) / n;
    mean_norm += squared_norm(stabilized_target(pair, b, NoiseScale(1.0))) / n;
  }
  EXPECT_NEAR(mean_loss, mean_norm, 1e-12 * mean_norm);
}

TEST(Forward, DependsOnTime) {
  const ModelConfig c = small_config();
  const Parameters p = random_parameters(c, 3);
  const Tensor x = Tensor::from({0.3, -0.2, 1.0});
  EXPECT_NE(forward(p, c, x, 0.0), forward(p, c, x, 0.9));
}

TEST(Forward, SwappingIdenticalHiddenUnitsIsInvariant) {
  ModelConfig c = small_config();
  c.hidden = {5};
  Parameters p = random_parameters(c, 4);
  const auto layout = parameter_layout(c);
  const LayerSlot& h = layout[0];
  const LayerSlot& o = layout[1];
  // Make units 1 and 3 identical, then swap them.
  for (Index j = 0; j < h.in; ++j) p.values[h.weight_offset + j * h.out + 3] = p.values[h.weight_offset + j * h.out + 1];
  p.values[h.bias_offset + 3] = p.values[h.bias_offset + 1];
  Parameters q = p;
  for (Index r = 0; r < o.out; ++r) {
    std::swap(q.values[o.weight_offset + 1 * o.out + r], q.values[o.weight_offset + 3 * o.out + r]);
  }
  const Tensor x = Tensor::from({0.7, -1.1, 0.2});
  const Tensor a = forward(p, c, x, 0.4), b = forward(q, c, x, 0.4);
  for (Index j = 0; j < 3; ++j) EXPECT_NEAR(a[j], b[j], 1e-14);
}

TEST(Forward, BatchMatchesSingle) {
  const ModelConfig c = small_config(3, 2);
  const Parameters p = random_parameters(c, 5);
  RngStream rng(6);
  Matrix x(3, 4), ctx(2, 4);
  std::vector<double> times(4);
  for (int j = 0; j < 4; ++j) {
    x.col(j) = gaussian(rng, {3}).vec();
    ctx.col(j) = gaussian(rng, {2}).vec();
    times[static_cast<std::size_t>(j)] = rng.uniform();
  }
  const Matrix out = forward_batch(p, c, x, times, ctx);
  for (int j = 0; j < 4; ++j) {
    const Tensor cj = Tensor::from_vector(ctx.col(j));
    const Tensor single = forward(p, c, Tensor::from_vector(x.col(j)), times[static_cast<std::size_t>(j)], &cj);
    for (Index i = 0; i < 3; ++i) EXPECT_NEAR(out(i, j), single[i], 1e-14);
  }
}

TEST(Forward, RejectsWrongInputWidth) {
  const ModelConfig c = small_config();
  const Parameters p = random_parameters(c, 5);
  EXPECT_THROW(forward(p, c, Tensor::from({1.0}), 0.5), std::invalid_argument);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  const ModelConfig c = small_config();
  const Parameters p = random_parameters(c, 7);
  const Gradients g = backward(p, c, Tensor::from({0.1, 0.2, 0.3}), 0.5, nullptr, Tensor::from({0.0, 0.0, 0.0}));
  EXPECT_EQ(squared_norm(g.params), 0.0);
  EXPECT_EQ(squared_norm(g.x), 0.0);
}

TEST(Backward, LinearInUpstream) {
  const ModelConfig c = small_config();
  const Parameters p = random_parameters(c, 8);
  const Tensor x = Tensor::from({0.1, 0.2, 0.3});
  const Tensor a = Tensor::from({1.0, -2.0, 0.5}), b = Tensor::from({0.3, 0.7, -1.5});
  const Tensor ab = a.with_values(a.vec() + b.vec());
  const Gradients ga = backward(p, c, x, 0.3, nullptr, a);
  const Gradients gb = backward(p, c, x, 0.3, nullptr, b);
  const Gradients gab = backward(p, c, x, 0.3, nullptr, ab);
  EXPECT_LE((gab.params.vec() - ga.params.vec() - gb.params.vec()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((gab.x.vec() - ga.x.vec() - gb.x.vec()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Backward, InputGradientMatchesCentralDifferences) {
  for (Activation act : {Activation::tanh, Activation::softplus}) {
    ModelConfig c = small_config(3, 1);
    c.activation = act;
    const Parameters p = random_parameters(c, 9);
    const Tensor x = Tensor::from({0.4, -0.3, 0.8}), ctx = Tensor::from({0.25});
    const Tensor up = Tensor::from({0.6, -1.0, 0.2});
    const Gradients g = backward(p, c, x, 0.7, &ctx, up);
    for (Index j = 0; j < 3; ++j) {
      Tensor hi = x, lo = x;
      hi[j] += 1e-5;
      lo[j] -= 1e-5;
      const double fd = (forward(p, c, hi, 0.7, &ctx).vec().dot(up.vec()) -
                         forward(p, c, lo, 0.7, &ctx).vec().dot(up.vec())) /
                        2e-5;
      EXPECT_NEAR(g.x[j], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Backward, ParameterGradientMatchesCentralDifferences) {
  std::uint64_t k = 0;
  for (Activation act : {Activation::tanh, Activation::softplus}) {
    for (Index ctx : {0, 2}) {
      ModelConfig c = small_config(4, ctx);
      c.activation = act;
      for (ObjectiveKind kind :
           {ObjectiveKind::displacement, ObjectiveKind::velocity, ObjectiveKind::stabilized_velocity}) {
        EXPECT_LE(loss_gradient_fd_error(c, kind, NoiseScale(1.0), 64, 1e-5, RngStream(10).derive(k++)), 1e-6);
      }
    }
  }
}

TEST(ModelConfig, JsonRoundTrip) {
  ModelConfig c = small_config(5, 1);
  c.activation = Activation::softplus;
  EXPECT_EQ(model_config_from_json(to_json(c)), c);
}

TEST(ModelConfig, RejectsEmptyInput) {
  ModelConfig c;
  c.input_dim = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ParameterFile, SerializationRoundTrip) {
  ParameterFile f{small_config(3, 2), random_parameters(small_config(3, 2), 11), {{"objective", "velocity"}}};
  const ParameterFile g = deserialize_parameters(serialize_parameters(f));
  EXPECT_EQ(g.config, f.config);
  EXPECT_EQ(g.params.values, f.params.values);
  EXPECT_EQ(g.metadata, f.metadata);
}

TEST(ParameterFile, RejectsCorruptInput) {
  const ParameterFile f{small_config(), random_parameters(small_config(), 12), {}};
  std::string bytes = serialize_parameters(f);
  EXPECT_THROW(deserialize_parameters(bytes.substr(0, bytes.size() - 3)), std::runtime_error);
  bytes[0] = 'X';
  EXPECT_THROW(deserialize_parameters(bytes), std::runtime_error);
}

TEST(ParameterFile, SaveLoad) {
  const auto path = std::filesystem::temp_directory_path() / "bbridge_test_params.bin";
  const ParameterFile f{small_config(), random_parameters(small_config(), 13), {}};
  save_parameters(path, f);
  EXPECT_EQ(load_parameters(path).params.values, f.params.values);
  std::filesystem::remove(path);
}
