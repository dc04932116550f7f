#pragma once

#include <vector>

#include "crossview/rng.hpp"
#include "crossview/tensor.hpp"

namespace crossview {

enum class Mode { kTrain, kEval };

// 4x4 stride-2 convolution, zero padding on the bottom/right so output dims
// are ceil(in/2) and the first window sits flush with the top-left corner.
struct ConvLayer {
  static constexpr int kKernelSize = 4;
  static constexpr int kStride = 2;

  Tensor weight;  // out_ch x in_ch x 4 x 4
  Tensor bias;    // out_ch

  ConvLayer() = default;
  ConvLayer(int in_channels, int out_channels);

  int in_channels() const { return weight.dim(1); }
  int out_channels() const { return weight.dim(0); }
};

struct BatchNormLayer {
  Tensor gamma;  // per channel
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;

  // Batch statistics cached by the last train-mode forward; consumed by
  // backward.
  std::vector<double> saved_mean;
  std::vector<double> saved_invstd;

  BatchNormLayer() = default;
  explicit BatchNormLayer(int channels);

  int channels() const { return gamma.dim(0); }
};

inline int conv_out_extent(int in) { return (in + 1) / 2; }

// Forward ops. Backward counterparts read y's grad buffer and accumulate into
// x's grad (when enabled) and the layer's parameter grads (when enabled).
Tensor conv2d(const Tensor& x, const ConvLayer& layer);
void conv2d_backward(Tensor& x, ConvLayer& layer, const Tensor& y);

// max(x, 0.2*x); subgradient at 0 is 1.
Tensor leaky_relu(const Tensor& x);
void leaky_relu_backward(Tensor& x, const Tensor& y);

Tensor batch_norm(const Tensor& x, BatchNormLayer& layer, Mode mode);
void batch_norm_backward(Tensor& x, BatchNormLayer& layer, const Tensor& y, Mode mode);

// Align-corners-false bilinear resampling over the spatial dims.
Tensor resize_bilinear(const Tensor& x, int out_h, int out_w);
void resize_bilinear_backward(Tensor& x, const Tensor& y);

Tensor concat_channels(const std::vector<const Tensor*>& xs);
void concat_channels_backward(const std::vector<Tensor*>& xs, const Tensor& y);

// Generalized-mean pooling over the spatial dims: (mean of x^p)^(1/p) per
// channel, inputs clamped at 1e-6. Gradients flow only through unclamped
// entries. N x C x H x W -> N x C.
Tensor gem_pool(const Tensor& x, double p);
void gem_pool_backward(Tensor& x, double p, const Tensor& y);

// Row-wise unit L2 normalization of a vector (D) or matrix (N x D).
Tensor l2_normalize(const Tensor& x);
void l2_normalize_backward(Tensor& x, const Tensor& y);

constexpr double kLeakySlope = 0.2;
constexpr double kGemClamp = 1e-6;

}  // namespace crossview
