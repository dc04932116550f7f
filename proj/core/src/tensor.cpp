#include "crossview/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace crossview {

int64_t shape_size(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("tensor extent must be non-negative");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), v_(static_cast<size_t>(shape_size(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), v_(static_cast<size_t>(shape_size(shape_)), fill) {}

int64_t Tensor::offset4(int n, int c, int h, int w) const {
  const int64_t C = shape_[1], H = shape_[2], W = shape_[3];
  return ((static_cast<int64_t>(n) * C + c) * H + h) * W + w;
}

double& Tensor::at4(int n, int c, int h, int w) { return v_[static_cast<size_t>(offset4(n, c, h, w))]; }

double Tensor::at4(int n, int c, int h, int w) const {
  return v_[static_cast<size_t>(offset4(n, c, h, w))];
}

void Tensor::enable_grad() {
  if (g_.size() != v_.size()) g_.assign(v_.size(), 0.0);
}

void Tensor::zero_grad() {
  if (g_.empty()) {
    g_.assign(v_.size(), 0.0);
  } else {
    std::fill(g_.begin(), g_.end(), 0.0);
  }
}

void Tensor::disable_grad() {
  g_.clear();
  g_.shrink_to_fit();
}

bool Tensor::all_finite() const {
  for (double x : v_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace crossview
