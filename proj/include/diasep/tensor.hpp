// Dense row-major tensors and dimension bookkeeping shared by all modules.
#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace diasep {

using cdouble = std::complex<double>;

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::runtime_error(msg);
}

inline void check(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

/// Dense tensor with row-major layout and a runtime shape.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(count(shape_), T{}) {}

  Tensor(std::initializer_list<std::size_t> shape)
      : Tensor(std::vector<std::size_t>(shape)) {}

  static std::size_t count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  template <typename... Ix>
  T& operator()(Ix... ix) {
    return data_[offset({static_cast<std::size_t>(ix)...})];
  }
  template <typename... Ix>
  const T& operator()(Ix... ix) const {
    return data_[offset({static_cast<std::size_t>(ix)...})];
  }

  void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  std::size_t offset(std::initializer_list<std::size_t> ix) const {
    std::size_t off = 0;
    std::size_t i = 0;
    for (std::size_t v : ix) {
      off = off * shape_[i] + v;
      ++i;
    }
    return off;
  }

  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

/// Size bookkeeping for one meeting segment.
struct Dims {
  std::size_t T = 0;  // frames
  std::size_t F = 0;  // frequency bins
  std::size_t C = 0;  // channels
  std::size_t D = 0;  // embedding dimension
  std::size_t K = 0;  // spectral components
  std::size_t N = 0;  // true speakers
  std::size_t L = 0;  // spatial components

  void validate() const {
    check(T > 0 && F > 0 && C > 0 && D > 0 && K > 0 && N > 0 && L > 0,
          "Dims: all dimensions must be strictly positive");
  }

  // Default pipeline configuration: K speakers, two positions each plus noise.
  static Dims for_speakers(std::size_t n_speakers) {
    Dims d;
    d.N = n_speakers;
    d.K = n_speakers;
    d.L = 2 * n_speakers + 1;
    return d;
  }
};

}  // namespace diasep
