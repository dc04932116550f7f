#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crossview/geometry.hpp"
#include "crossview/ops.hpp"
#include "crossview/tensor.hpp"

namespace crossview {

// Where orientation channels enter the branch: at the input only (I), at the
// input and after every block (II), or not at all (RGB ablation baseline).
enum class Scheme { kSchemeI, kSchemeII, kRgbBaseline };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

constexpr int kNumBlocks = 7;

struct BranchConfig {
  std::vector<int> channel_schedule = {64, 128, 256, 512, 512, 512, 512};
  Scheme scheme = Scheme::kSchemeI;

  bool uses_uv() const { return scheme != Scheme::kRgbBaseline; }
  int input_channels() const { return uses_uv() ? 5 : 3; }
  // Descriptor width: the last three blocks are aggregated, so D is their sum
  // (1536 for the default schedule).
  int descriptor_dim() const;
  void validate() const;
};

struct ConvBlock {
  ConvLayer conv;
  BatchNormLayer bn;
};

// All intermediates of one branch pass, kept for the backward sweep.
struct BranchForward {
  Tensor input;                   // N x (3|5) x H x W
  std::vector<Tensor> uv_levels;  // Scheme-II per-block downsampled U-V tensors
  std::vector<Tensor> concat_in;  // Scheme-II concatenated conv inputs (blocks 2..7)
  std::vector<Tensor> conv_out;
  std::vector<Tensor> act_out;
  std::vector<Tensor> bn_out;
  Tensor resized6;
  Tensor resized7;
  Tensor aggregated;
  Tensor pooled;      // N x D
  Tensor embeddings;  // N x D, unit rows
};

// One view's encoder: 7 blocks of conv(4x4, stride 2) -> leaky-ReLU -> BN,
// orientation injection per the scheme, multi-scale GeM embedding head.
class Branch {
 public:
  Branch() = default;
  Branch(const BranchConfig& config, Rng& rng);

  const BranchConfig& config() const { return config_; }
  std::vector<ConvBlock>& blocks() { return blocks_; }
  const std::vector<ConvBlock>& blocks() const { return blocks_; }

  BranchForward forward(const Tensor& image, const OrientationMap& uv, Mode mode, double gem_p,
                        bool with_grad) const;
  // Consumes fw.embeddings' grad; accumulates into parameter grads.
  void backward(BranchForward& fw, Mode mode, double gem_p);

  int64_t parameter_count() const;

 private:
  BranchConfig config_;
  // Blocks are mutated by train-mode forward (BN stats) and by backward; the
  // const_cast in forward is confined to batch_norm's stat updates.
  mutable std::vector<ConvBlock> blocks_;
};

struct ModelConfig {
  BranchConfig branch;
  double gem_p = 3.0;
  uint64_t seed = 0;
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

// Two independent branches; no parameter is shared between them.
class SiameseModel {
 public:
  SiameseModel() = default;
  explicit SiameseModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  Branch& ground() { return ground_; }
  Branch& satellite() { return satellite_; }
  const Branch& ground() const { return ground_; }
  const Branch& satellite() const { return satellite_; }

  int descriptor_dim() const { return config_.branch.descriptor_dim(); }

  // Stable traversal order; used by the optimizer and the checkpoint format.
  std::vector<NamedTensor> named_parameters();
  std::vector<NamedTensor> named_buffers();  // BN running stats
  int64_t count_parameters() const;

  void enable_grads();
  void zero_grads();

  // Unit-norm descriptors for a batch of images of one view.
  Tensor embed_batch(const Tensor& images, const OrientationMap& uv, View side, Mode mode);
  // Single-image convenience: returns a 1-d descriptor.
  Tensor embed(const ImageBuffer& image, const OrientationMap& uv, View side, Mode mode);

 private:
  ModelConfig config_;
  Branch ground_;
  Branch satellite_;
};

// Resizes the two coarser maps up to the first map's spatial size and stacks
// channels. Exposed for tests; branches fuse the same computation.
Tensor aggregate_multiscale(const std::vector<const Tensor*>& maps);

// Packs an interleaved [-1,1] image into batch slot n of an NCHW tensor.
void write_image_planes(const ImageBuffer& image, Tensor& dst, int n);

}  // namespace crossview
