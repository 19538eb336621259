#include "scribseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scribseg/errors.hpp"

namespace scribseg {

Tensor::Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
  std::int64_t n = 1;
  for (std::int64_t d : shape_) {
    if (d < 0) throw ValidationError("Tensor: negative dimension");
    n *= d;
  }
  data_.assign(static_cast<size_t>(n), 0.0);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::add_scaled(const Tensor& x, double a) {
  if (!same_shape(x)) {
    throw ValidationError("Tensor::add_scaled: shape mismatch " + shape_str() +
                          " vs " + x.shape_str());
  }
  const double* src = x.data();
  double* dst = data();
  const std::int64_t n = size();
  for (std::int64_t i = 0; i < n; ++i) dst[i] += a * src[i];
}

void Tensor::scale(double a) {
  for (double& v : data_) v *= a;
}

double Tensor::abs_max() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) {
    os << (i ? "," : "") << shape_[i];
  }
  os << "]";
  return os.str();
}

}  // namespace scribseg
