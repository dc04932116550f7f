#pragma once

#include <cstdint>
#include <vector>

#include "crossview/rng.hpp"
#include "crossview/tensor.hpp"

namespace crossview {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment accumulators parallel to a fixed parameter list.
struct AdamState {
  AdamConfig config;
  int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  void init(const std::vector<Tensor*>& params);
  bool initialized() const { return !m.empty(); }
};

// Bias-corrected Adam update from each parameter's grad buffer.
void adam_step(const std::vector<Tensor*>& params, AdamState& state);

enum class InitKind { kConvWeight, kBnGamma };

// Gaussian init: conv weights N(0, 0.02^2), batch-norm gamma N(1, 0.02^2).
Tensor init_weights(std::vector<int> shape, InitKind kind, Rng& rng);

}  // namespace crossview
