#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scribseg {

// Dense row-major double tensor. Network activations use NCHW layout.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape);

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  const std::vector<std::int64_t>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<size_t>(i)]; }

  void fill(double v);
  void zero() { fill(0.0); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;

  // y += a * x, shapes must match.
  void add_scaled(const Tensor& x, double a);
  void operator+=(const Tensor& x) { add_scaled(x, 1.0); }
  void scale(double a);

  double abs_max() const;
  std::string shape_str() const;

 private:
  std::vector<std::int64_t> shape_;
  std::vector<double> data_;
};

}  // namespace scribseg
