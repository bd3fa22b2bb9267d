#pragma once

// Dense tensors on top of Eigen vectors, compensated reductions and a
// counter-based random source (Philox4x32-10, Box-Muller normals).

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bbridge {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline Index shape_size(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d < 0) throw std::invalid_argument("negative extent in shape");
    n *= d;
  }
  return n;
}

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

/// Flat row-major array with an explicit shape. Arithmetic goes through
/// vec(), which exposes the storage as an Eigen column vector.
template <typename Scalar>
class BasicTensor {
 public:
  BasicTensor() : shape_{0} {}

  explicit BasicTensor(Shape shape)
      : shape_(std::move(shape)), data_(Vector<Scalar>::Zero(shape_size(shape_))) {}

  BasicTensor(Shape shape, Vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_)) {
      throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                  " does not match shape " + shape_string(shape_));
    }
  }

  /// Rank-1 tensor holding `values`.
  static BasicTensor from(std::initializer_list<Scalar> values) {
    Vector<Scalar> v(static_cast<Index>(values.size()));
    Index i = 0;
    for (Scalar x : values) v[i++] = x;
    return from_vector(std::move(v));
  }

  static BasicTensor from_vector(Vector<Scalar> v) {
    Shape s{v.size()};
    return BasicTensor(std::move(s), std::move(v));
  }

  static BasicTensor zeros_like(const BasicTensor& other) { return BasicTensor(other.shape()); }

  const Shape& shape() const { return shape_; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Vector<Scalar>& vec() { return data_; }
  const Vector<Scalar>& vec() const { return data_; }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  std::span<const Scalar> values() const {
    return {data_.data(), static_cast<std::size_t>(data_.size())};
  }

  bool all_finite() const { return data_.allFinite(); }

  bool same_shape(const BasicTensor& other) const { return shape_ == other.shape_; }

  /// Same shape, new values; throws if `v` has the wrong length.
  BasicTensor with_values(Vector<Scalar> v) const { return BasicTensor(shape_, std::move(v)); }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Vector<Scalar> data_;
};

using Tensor = BasicTensor<double>;

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}

/// Neumaier-compensated running sum.
template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar x) {
    const Scalar t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(Scalar x) {
    add(x);
    return *this;
  }
  Scalar value() const { return sum_ + comp_; }

 private:
  Scalar sum_ = 0;
  Scalar comp_ = 0;
};

template <typename Derived>
typename Derived::Scalar compensated_sum(const Eigen::DenseBase<Derived>& x) {
  CompensatedSum<typename Derived::Scalar> acc;
  for (Index i = 0; i < x.size(); ++i) acc += x.derived().coeff(i);
  return acc.value();
}

template <typename Derived>
typename Derived::Scalar compensated_squared_norm(const Eigen::DenseBase<Derived>& x) {
  CompensatedSum<typename Derived::Scalar> acc;
  for (Index i = 0; i < x.size(); ++i) {
    const auto v = x.derived().coeff(i);
    acc += v * v;
  }
  return acc.value();
}

template <typename Scalar>
Scalar squared_norm(const BasicTensor<Scalar>& x) {
  return compensated_squared_norm(x.vec());
}

/// Running mean and variance (Welford) with compensated mean.
class RunningMoments {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance.
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double standard_error() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0;
  double m2_ = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al. 2011).
inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo32(kM0, ctr[0], hi0, lo0);
    detail::mulhilo32(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// Counter-based random stream. Every draw is a pure function of
/// (seed, stream, counter); one counter increment yields one 128-bit block,
/// i.e. two uniforms or two normals.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t counter = 0)
      : seed_(seed), stream_(stream), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  /// Independent child stream; identical inputs give identical children.
  RngStream derive(std::uint64_t child) const {
    return RngStream(seed_, detail::splitmix64(stream_ ^ detail::splitmix64(child + 0x5851F42D4C957F2DULL)), 0);
  }

  PhiloxBlock next_block() {
    const PhiloxBlock ctr{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                          static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const PhiloxKey key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    ++counter_;
    return philox4x32_10(ctr, key);
  }

  /// Two uniforms in (0, 1].
  std::array<double, 2> next_uniform_pair() {
    const PhiloxBlock b = next_block();
    const std::uint64_t a = (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
    const std::uint64_t c = (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
    return {to_unit(a), to_unit(c)};
  }

  /// One uniform in (0, 1]; consumes a whole block.
  double uniform() { return next_uniform_pair()[0]; }

  /// Two independent standard normals via Box-Muller.
  std::array<double, 2> next_normal_pair() {
    const auto [u1, u2] = next_uniform_pair();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  double normal() { return next_normal_pair()[0]; }

 private:
  static double to_unit(std::uint64_t x) { return static_cast<double>((x >> 11) + 1) * 0x1.0p-53; }

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
};

/// Fills `out` with i.i.d. N(0,1) draws, ceil(n/2) counter increments.
template <typename Derived>
void fill_gaussian(RngStream& rng, Eigen::DenseBase<Derived>& out) {
  const Index n = out.size();
  for (Index i = 0; i < n; i += 2) {
    const auto z = rng.next_normal_pair();
    out.derived().coeffRef(i) = z[0];
    if (i + 1 < n) out.derived().coeffRef(i + 1) = z[1];
  }
}

inline Tensor gaussian(RngStream& rng, const Shape& shape) {
  Tensor t(shape);
  fill_gaussian(rng, t.vec());
  return t;
}

}  // namespace bbridge
