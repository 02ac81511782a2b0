#pragma once

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace pairfeat {

/// Dense row-major tensor of doubles. Rank is dynamic but small (<= 4 in
/// practice: batch x channel x height x width).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(numel(shape_)), 0.0);
  }

  Tensor(std::initializer_list<int64_t> shape)
      : Tensor(std::vector<int64_t>(shape)) {}

  static int64_t numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  const std::vector<int64_t>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](int64_t i) {
    assert(i >= 0 && i < size());
    return data_[static_cast<size_t>(i)];
  }
  double operator[](int64_t i) const {
    assert(i >= 0 && i < size());
    return data_[static_cast<size_t>(i)];
  }

  double& at(int64_t a, int64_t b) {
    assert(ndim() == 2);
    return data_[static_cast<size_t>(a * shape_[1] + b)];
  }
  double at(int64_t a, int64_t b) const {
    assert(ndim() == 2);
    return data_[static_cast<size_t>(a * shape_[1] + b)];
  }
  double& at(int64_t a, int64_t b, int64_t c) {
    assert(ndim() == 3);
    return data_[static_cast<size_t>((a * shape_[1] + b) * shape_[2] + c)];
  }
  double at(int64_t a, int64_t b, int64_t c) const {
    assert(ndim() == 3);
    return data_[static_cast<size_t>((a * shape_[1] + b) * shape_[2] + c)];
  }
  double& at(int64_t a, int64_t b, int64_t c, int64_t d) {
    assert(ndim() == 4);
    return data_[static_cast<size_t>(
        ((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d)];
  }
  double at(int64_t a, int64_t b, int64_t c, int64_t d) const {
    assert(ndim() == 4);
    return data_[static_cast<size_t>(
        ((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d)];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

 private:
  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

inline bool all_finite(const Tensor& t) {
  for (int64_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) return false;
  }
  return true;
}

}  // namespace pairfeat
