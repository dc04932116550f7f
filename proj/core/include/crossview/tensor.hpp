#pragma once

#include <cstdint>
#include <vector>

namespace crossview {

// Dense row-major n-d array of doubles with an optional same-shape gradient
// buffer. Activations follow the NCHW layout. Backward passes accumulate (+=)
// into grad; callers zero grads at the start of each step.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, double fill);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double v) { return Tensor(std::move(shape), v); }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t size() const { return static_cast<int64_t>(v_.size()); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  double& operator[](int64_t i) { return v_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return v_[static_cast<size_t>(i)]; }

  // NCHW convenience accessors.
  double& at4(int n, int c, int h, int w);
  double at4(int n, int c, int h, int w) const;
  int64_t offset4(int n, int c, int h, int w) const;

  // Gradient slot.
  bool grad_enabled() const { return !g_.empty(); }
  void enable_grad();
  void zero_grad();
  void disable_grad();
  double* grad() { return g_.data(); }
  const double* grad() const { return g_.data(); }
  std::vector<double>& grad_values() { return g_; }
  const std::vector<double>& grad_values() const { return g_; }

  bool all_finite() const;

 private:
  std::vector<int> shape_;
  std::vector<double> v_;
  std::vector<double> g_;
};

int64_t shape_size(const std::vector<int>& shape);

}  // namespace crossview
