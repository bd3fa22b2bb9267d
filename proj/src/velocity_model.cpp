#include "bbridge/velocity_model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "bbridge/io.hpp"

namespace bbridge {

std::string_view to_string(Activation a) { return a == Activation::tanh ? "tanh" : "softplus"; }

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "softplus" || name == "smooth-relu") return Activation::softplus;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (input_dim < 1) throw std::invalid_argument("model input_dim must be >= 1");
  if (time_features < 0 || context_dim < 0) throw std::invalid_argument("negative feature count");
  for (Index w : hidden) {
    if (w < 1) throw std::invalid_argument("hidden widths must be >= 1");
  }
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"input_dim", c.input_dim},
          {"hidden", c.hidden},
          {"time_features", c.time_features},
          {"context_dim", c.context_dim},
          {"activation", std::string(to_string(c.activation))}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.input_dim = j.at("input_dim").get<Index>();
  c.hidden = j.at("hidden").get<std::vector<Index>>();
  c.time_features = j.at("time_features").get<Index>();
  c.context_dim = j.at("context_dim").get<Index>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.validate();
  return c;
}

std::vector<LayerSlot> parameter_layout(const ModelConfig& config) {
  config.validate();
  std::vector<LayerSlot> layout;
  Index in = config.feature_dim();
  Index offset = 0;
  auto push = [&](Index out) {
    LayerSlot slot{in, out, offset, offset + in * out};
    offset = slot.bias_offset + out;
    layout.push_back(slot);
    in = out;
  };
  for (Index w : config.hidden) push(w);
  push(config.input_dim);
  return layout;
}

Index parameter_count(const ModelConfig& config) {
  const LayerSlot last = parameter_layout(config).back();
  return last.bias_offset + last.out;
}

Vector<double> time_features(double t, Index count) {
  Vector<double> f(count);
  for (Index j = 0; j < count; ++j) {
    const double omega = std::numbers::pi * std::ldexp(1.0, static_cast<int>(j / 2));
    f[j] = (j % 2 == 0) ? std::sin(omega * t) : std::cos(omega * t);
  }
  return f;
}

Parameters init_parameters(const ModelConfig& config, RngStream& rng) {
  const auto layout = parameter_layout(config);
  Parameters p{Vector<double>::Zero(parameter_count(config))};
  for (std::size_t l = 0; l + 1 < layout.size(); ++l) {
    const LayerSlot& s = layout[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
    for (Index i = 0; i < s.in * s.out; i += 2) {
      const auto u = rng.next_uniform_pair();
      p.values[s.weight_offset + i] = bound * (2.0 * u[0] - 1.0);
      if (i + 1 < s.in * s.out) p.values[s.weight_offset + i + 1] = bound * (2.0 * u[1] - 1.0);
    }
  }
  return p;
}

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using ConstVecMap = Eigen::Map<const Vector<double>>;

ConstMap weight(const Parameters& p, const LayerSlot& s) { return {p.values.data() + s.weight_offset, s.out, s.in}; }
ConstVecMap bias(const Parameters& p, const LayerSlot& s) { return {p.values.data() + s.bias_offset, s.out}; }

void activate(Activation a, const Matrix& pre, Matrix& out) {
  if (a == Activation::tanh) {
    out = pre.array().tanh().matrix();
  } else {
    // log(1 + e^x) without overflow
    out = pre.unaryExpr([](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); });
  }
}

// d act / d pre, evaluated from the pre-activation and activation values
Matrix activation_slope(Activation a, const Matrix& pre, const Matrix& act) {
  if (a == Activation::tanh) return (1.0 - act.array().square()).matrix();
  return pre.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Matrix assemble_input(const ModelConfig& config, const Matrix& x, std::span<const double> times,
                      const Matrix& context) {
  const Index batch = x.cols();
  if (x.rows() != config.input_dim) throw std::invalid_argument("model input has wrong dimension");
  if (static_cast<Index>(times.size()) != batch) throw std::invalid_argument("one time per batch column required");
  if (config.context_dim > 0 && (context.rows() != config.context_dim || context.cols() != batch)) {
    throw std::invalid_argument("context has wrong shape");
  }
  Matrix in(config.feature_dim(), batch);
  in.topRows(config.input_dim) = x;
  for (Index j = 0; j < batch; ++j) {
    in.block(config.input_dim, j, config.time_features, 1) = time_features(times[static_cast<std::size_t>(j)], config.time_features);
  }
  if (config.context_dim > 0) in.bottomRows(config.context_dim) = context;
  return in;
}

struct Tape {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each hidden layer
  Matrix output;
};

Tape run_forward(const Parameters& params, const ModelConfig& config, const Matrix& x, std::span<const double> times,
                 const Matrix& context) {
  const auto layout = parameter_layout(config);
  if (params.values.size() != parameter_count(config)) throw std::invalid_argument("parameter count mismatch");
  Tape tape;
  Matrix z = assemble_input(config, x, times, context);
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const LayerSlot& s = layout[l];
    Matrix a = weight(params, s) * z;
    a.colwise() += bias(params, s);
    tape.inputs.push_back(std::move(z));
    if (l + 1 == layout.size()) {
      tape.output = std::move(a);
    } else {
      Matrix h;
      activate(config.activation, a, h);
      tape.pre.push_back(std::move(a));
      z = std::move(h);
    }
  }
  return tape;
}

}  // namespace

Matrix forward_batch(const Parameters& params, const ModelConfig& config, const Matrix& x,
                     std::span<const double> times, const Matrix& context) {
  return run_forward(params, config, x, times, context).output;
}

BatchGradients backward_batch(const Parameters& params, const ModelConfig& config, const Matrix& x,
                              std::span<const double> times, const Matrix& context, const Matrix& upstream) {
  if (upstream.rows() != config.input_dim || upstream.cols() != x.cols()) {
    throw std::invalid_argument("upstream gradient has wrong shape");
  }
  const auto layout = parameter_layout(config);
  const Tape tape = run_forward(params, config, x, times, context);
  BatchGradients g;
  g.params = Vector<double>::Zero(params.values.size());
  Matrix delta = upstream;  // d/d(pre-activation) of the current layer
  for (std::size_t l = layout.size(); l-- > 0;) {
    const LayerSlot& s = layout[l];
    Eigen::Map<Matrix>(g.params.data() + s.weight_offset, s.out, s.in) = delta * tape.inputs[l].transpose();
    g.params.segment(s.bias_offset, s.out) = delta.rowwise().sum();
    Matrix back = weight(params, s).transpose() * delta;
    if (l > 0) {
      const Matrix& pre = tape.pre[l - 1];
      delta = back.cwiseProduct(activation_slope(config.activation, pre, tape.inputs[l]));
    } else {
      g.x = back.topRows(config.input_dim);
    }
  }
  return g;
}

namespace {
Matrix context_column(const ModelConfig& config, const Tensor* context) {
  if (config.context_dim == 0) return Matrix(0, 1);
  if (context == nullptr) return Matrix::Zero(config.context_dim, 1);
  if (context->size() != config.context_dim) throw std::invalid_argument("context has wrong dimension");
  return context->vec();
}
}  // namespace

Tensor forward(const Parameters& params, const ModelConfig& config, const Tensor& x, double t,
               const Tensor* context) {
  if (x.size() != config.input_dim) throw std::invalid_argument("forward: input has wrong dimension");
  const double times[1] = {t};
  const Matrix out = forward_batch(params, config, x.vec(), times, context_column(config, context));
  return x.with_values(out.col(0));
}

Gradients backward(const Parameters& params, const ModelConfig& config, const Tensor& x, double t,
                   const Tensor* context, const Tensor& upstream) {
  if (x.size() != config.input_dim || upstream.size() != config.input_dim) {
    throw std::invalid_argument("backward: shape mismatch");
  }
  const double times[1] = {t};
  BatchGradients g = backward_batch(params, config, x.vec(), times, context_column(config, context), upstream.vec());
  return {Tensor::from_vector(std::move(g.params)), x.with_values(g.x.col(0))};
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'B', 'B', 'P', 'A', 'R', 'A', 'M', 'S'};

template <typename T>
void put(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little, "parameter files are little-endian");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view& in) {
  if (in.size() < sizeof(T)) throw std::runtime_error("parameter file truncated");
  T v;
  std::memcpy(&v, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return v;
}
}  // namespace

std::string serialize_parameters(const ParameterFile& file) {
  if (file.params.values.size() != parameter_count(file.config)) {
    throw std::invalid_argument("parameter count does not match config");
  }
  const std::string header = nlohmann::json{{"config", to_json(file.config)}, {"metadata", file.metadata}}.dump();
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kParameterFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  put<std::uint64_t>(out, static_cast<std::uint64_t>(file.params.values.size()));
  for (Index i = 0; i < file.params.values.size(); ++i) put<double>(out, file.params.values[i]);
  return out;
}

ParameterFile deserialize_parameters(std::string_view in) {
  if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a parameter file");
  }
  in.remove_prefix(sizeof(kMagic));
  const auto version = take<std::uint32_t>(in);
  if (version != kParameterFormatVersion) {
    throw std::runtime_error("unsupported parameter format version " + std::to_string(version));
  }
  const auto header_len = take<std::uint32_t>(in);
  if (in.size() < header_len) throw std::runtime_error("parameter file truncated");
  const auto header = nlohmann::json::parse(in.substr(0, header_len));
  in.remove_prefix(header_len);
  ParameterFile file;
  file.config = model_config_from_json(header.at("config"));
  file.metadata = header.value("metadata", nlohmann::json::object());
  const auto count = take<std::uint64_t>(in);
  if (static_cast<Index>(count) != parameter_count(file.config)) {
    throw std::runtime_error("parameter count does not match stored config");
  }
  file.params.values.resize(static_cast<Index>(count));
  for (Index i = 0; i < file.params.values.size(); ++i) file.params.values[i] = take<double>(in);
  if (!in.empty()) throw std::runtime_error("trailing bytes in parameter file");
  if (!file.params.values.allFinite()) throw std::runtime_error("parameter file holds non-finite values");
  return file;
}

void save_parameters(const std::filesystem::path& path, const ParameterFile& file) {
  write_file_atomic(path, serialize_parameters(file));
}

ParameterFile load_parameters(const std::filesystem::path& path) { return deserialize_parameters(read_file(path)); }

}  // namespace bbridge
