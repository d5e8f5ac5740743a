#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace surfr {

/// Dense row-major tensor of 64-bit floats. 32-bit storage is deliberately
/// not offered: gradient checks at the tolerances used in the test suite are
/// unreliable in single precision, and the sizes involved are small.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<std::size_t>(numel_of(shape)), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<std::int64_t>(data.size()) != numel_of(shape)) {
      throw std::invalid_argument("tensor: shape/buffer size mismatch");
    }
  }

  static std::int64_t numel_of(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, double v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor vector(std::vector<double> d) {
    const int n = static_cast<int>(d.size());
    return Tensor({n}, std::move(d));
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }

  double& at(int i) { return data[static_cast<std::size_t>(i)]; }
  double at(int i) const { return data[static_cast<std::size_t>(i)]; }
  double& at(int i, int j) {
    return data[static_cast<std::size_t>(i) * cols() + j];
  }
  double at(int i, int j) const {
    return data[static_cast<std::size_t>(i) * cols() + j];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  void release() {
    data.clear();
    data.shrink_to_fit();
  }
};

/// Learnable weight: value plus accumulated gradient.
struct Parameter {
  Tensor value;
  Tensor grad;
  bool requires_grad = true;

  Parameter() = default;
  explicit Parameter(Tensor v) : value(std::move(v)) {
    grad = Tensor::zeros(value.shape);
  }

  void zero_grad() { grad.fill(0.0); }
};

}  // namespace surfr
