#pragma once

// Small fully connected velocity network v(x, t, context) with sinusoidal
// time features and hand-written reverse mode.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bbridge/numerics.hpp"

namespace bbridge {

enum class Activation { tanh, softplus };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct ModelConfig {
  Index input_dim = 1;
  std::vector<Index> hidden{64, 64};
  Index time_features = 8;
  Index context_dim = 0;
  Activation activation = Activation::tanh;

  Index feature_dim() const { return input_dim + time_features + context_dim; }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Where layer l's weight matrix (out x in, column-major) and bias live in
/// the flat parameter vector.
struct LayerSlot {
  Index in = 0;
  Index out = 0;
  Index weight_offset = 0;
  Index bias_offset = 0;
};

std::vector<LayerSlot> parameter_layout(const ModelConfig& config);
Index parameter_count(const ModelConfig& config);

struct Parameters {
  Vector<double> values;
};

/// sin/cos pairs at angular frequencies pi * 2^k; an odd count drops the last cos.
Vector<double> time_features(double t, Index count);

/// Hidden weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), hidden biases 0,
/// output layer all zeros (the initial field is v == 0).
Parameters init_parameters(const ModelConfig& config, RngStream& rng);

using Matrix = Eigen::MatrixXd;

/// Column-batched forward pass: column j of `x` is evaluated at times[j]
/// with context column j (context may be empty when context_dim == 0).
Matrix forward_batch(const Parameters& params, const ModelConfig& config, const Matrix& x,
                     std::span<const double> times, const Matrix& context);

struct BatchGradients {
  Vector<double> params;  // summed over the batch
  Matrix x;               // per-column input gradient
};

/// Exact gradients of sum_j <forward_batch(...).col(j), upstream.col(j)>.
BatchGradients backward_batch(const Parameters& params, const ModelConfig& config, const Matrix& x,
                              std::span<const double> times, const Matrix& context, const Matrix& upstream);

Tensor forward(const Parameters& params, const ModelConfig& config, const Tensor& x, double t,
               const Tensor* context = nullptr);

struct Gradients {
  Tensor params;
  Tensor x;
};

Gradients backward(const Parameters& params, const ModelConfig& config, const Tensor& x, double t,
                   const Tensor* context, const Tensor& upstream);

// ---------------------------------------------------------------------------
// Parameter container: "BBPARAMS" magic, u32 format version, u32 header
// length, JSON header {config, metadata}, u64 value count, raw little-endian
// IEEE-754 doubles.

inline constexpr std::uint32_t kParameterFormatVersion = 1;

struct ParameterFile {
  ModelConfig config;
  Parameters params;
  nlohmann::json metadata = nlohmann::json::object();
};

std::string serialize_parameters(const ParameterFile& file);
ParameterFile deserialize_parameters(std::string_view bytes);
void save_parameters(const std::filesystem::path& path, const ParameterFile& file);
ParameterFile load_parameters(const std::filesystem::path& path);

}  // namespace bbridge
