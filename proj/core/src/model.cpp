#include "crossview/model.hpp"

#include <cmath>
#include <stdexcept>

#include "crossview/errors.hpp"
#include "crossview/optim.hpp"

namespace crossview {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kSchemeI: return "I";
    case Scheme::kSchemeII: return "II";
    case Scheme::kRgbBaseline: return "rgb-baseline";
  }
  return "?";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "I" || name == "i") return Scheme::kSchemeI;
  if (name == "II" || name == "ii") return Scheme::kSchemeII;
  if (name == "rgb-baseline" || name == "rgb") return Scheme::kRgbBaseline;
  throw ValidationError("unknown scheme: " + name + " (expected I, II, or rgb-baseline)");
}

int BranchConfig::descriptor_dim() const {
  const size_t n = channel_schedule.size();
  return channel_schedule[n - 3] + channel_schedule[n - 2] + channel_schedule[n - 1];
}

void BranchConfig::validate() const {
  if (channel_schedule.size() != static_cast<size_t>(kNumBlocks))
    throw ValidationError("branch schedule must have exactly 7 entries");
  for (int c : channel_schedule)
    if (c < 1) throw ValidationError("branch schedule entries must be >= 1");
}

Branch::Branch(const BranchConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  blocks_.reserve(kNumBlocks);
  const int extra = config_.scheme == Scheme::kSchemeII ? 2 : 0;
  for (int k = 0; k < kNumBlocks; ++k) {
    const int in_ch = k == 0 ? config_.input_channels() : config_.channel_schedule[k - 1] + extra;
    const int out_ch = config_.channel_schedule[k];
    ConvBlock block;
    block.conv = ConvLayer(in_ch, out_ch);
    block.conv.weight = init_weights({out_ch, in_ch, 4, 4}, InitKind::kConvWeight, rng);
    block.bn = BatchNormLayer(out_ch);
    block.bn.gamma = init_weights({out_ch}, InitKind::kBnGamma, rng);
    blocks_.push_back(std::move(block));
  }
}

namespace {

Tensor broadcast_uv(const OrientationMap& map, int batch) {
  Tensor t({batch, 2, map.height, map.width});
  for (int n = 0; n < batch; ++n) write_uv_planes(map, t, n, 0);
  return t;
}

}  // namespace

BranchForward Branch::forward(const Tensor& image, const OrientationMap& uv, Mode mode,
                              double gem_p, bool with_grad) const {
  if (image.ndim() != 4 || image.dim(1) != 3)
    throw std::invalid_argument("branch forward: image tensor must be N x 3 x H x W");
  const int N = image.dim(0), H = image.dim(2), W = image.dim(3);
  if (config_.uses_uv() && (uv.height != H || uv.width != W))
    throw std::invalid_argument("branch forward: image and U-V map dims differ");

  BranchForward fw;
  if (config_.uses_uv()) {
    fw.input = Tensor({N, 5, H, W});
    for (int n = 0; n < N; ++n) {
      const double* src = image.data() + image.offset4(n, 0, 0, 0);
      double* dst = fw.input.data() + fw.input.offset4(n, 0, 0, 0);
      const int64_t plane = static_cast<int64_t>(H) * W;
      for (int c = 0; c < 3; ++c)
        for (int64_t i = 0; i < plane; ++i) dst[c * plane + i] = src[c * plane + i];
      write_uv_planes(uv, fw.input, n, 3);
    }
  } else {
    fw.input = image;
  }

  if (config_.scheme == Scheme::kSchemeII) {
    fw.uv_levels.reserve(kNumBlocks - 1);
    int factor = 2;
    for (int k = 0; k < kNumBlocks - 1; ++k, factor *= 2)
      fw.uv_levels.push_back(broadcast_uv(downsample_uv(uv, factor), N));
    fw.concat_in.resize(kNumBlocks - 1);
  }

  fw.conv_out.resize(kNumBlocks);
  fw.act_out.resize(kNumBlocks);
  fw.bn_out.resize(kNumBlocks);

  const Tensor* x = &fw.input;
  for (int k = 0; k < kNumBlocks; ++k) {
    if (k > 0) {
      if (config_.scheme == Scheme::kSchemeII) {
        fw.concat_in[k - 1] = concat_channels({&fw.bn_out[k - 1], &fw.uv_levels[k - 1]});
        if (with_grad) fw.concat_in[k - 1].enable_grad();
        x = &fw.concat_in[k - 1];
      } else {
        x = &fw.bn_out[k - 1];
      }
    }
    fw.conv_out[k] = conv2d(*x, blocks_[k].conv);
    if (with_grad) fw.conv_out[k].enable_grad();
    fw.act_out[k] = leaky_relu(fw.conv_out[k]);
    if (with_grad) fw.act_out[k].enable_grad();
    fw.bn_out[k] = batch_norm(fw.act_out[k], blocks_[k].bn, mode);
    if (with_grad) fw.bn_out[k].enable_grad();
  }

  Tensor& b5 = fw.bn_out[kNumBlocks - 3];
  Tensor& b6 = fw.bn_out[kNumBlocks - 2];
  Tensor& b7 = fw.bn_out[kNumBlocks - 1];
  fw.resized6 = resize_bilinear(b6, b5.dim(2), b5.dim(3));
  fw.resized7 = resize_bilinear(b7, b5.dim(2), b5.dim(3));
  if (with_grad) {
    fw.resized6.enable_grad();
    fw.resized7.enable_grad();
  }
  fw.aggregated = concat_channels({&b5, &fw.resized6, &fw.resized7});
  if (with_grad) fw.aggregated.enable_grad();
  fw.pooled = gem_pool(fw.aggregated, gem_p);
  if (with_grad) fw.pooled.enable_grad();
  fw.embeddings = l2_normalize(fw.pooled);
  if (with_grad) fw.embeddings.enable_grad();
  if (!fw.embeddings.all_finite()) throw NumericError("branch forward: non-finite embedding");
  return fw;
}

void Branch::backward(BranchForward& fw, Mode mode, double gem_p) {
  l2_normalize_backward(fw.pooled, fw.embeddings);
  gem_pool_backward(fw.aggregated, gem_p, fw.pooled);

  Tensor& b5 = fw.bn_out[kNumBlocks - 3];
  Tensor& b6 = fw.bn_out[kNumBlocks - 2];
  Tensor& b7 = fw.bn_out[kNumBlocks - 1];
  concat_channels_backward({&b5, &fw.resized6, &fw.resized7}, fw.aggregated);
  resize_bilinear_backward(b6, fw.resized6);
  resize_bilinear_backward(b7, fw.resized7);

  for (int k = kNumBlocks - 1; k >= 0; --k) {
    batch_norm_backward(fw.act_out[k], blocks_[k].bn, fw.bn_out[k], mode);
    leaky_relu_backward(fw.conv_out[k], fw.act_out[k]);
    Tensor* x = &fw.input;
    if (k > 0)
      x = config_.scheme == Scheme::kSchemeII ? &fw.concat_in[k - 1] : &fw.bn_out[k - 1];
    conv2d_backward(*x, blocks_[k].conv, fw.conv_out[k]);
    if (k > 0 && config_.scheme == Scheme::kSchemeII)
      concat_channels_backward({&fw.bn_out[k - 1], &fw.uv_levels[k - 1]}, fw.concat_in[k - 1]);
  }
}

int64_t Branch::parameter_count() const {
  int64_t n = 0;
  for (const ConvBlock& b : blocks_)
    n += b.conv.weight.size() + b.conv.bias.size() + b.bn.gamma.size() + b.bn.beta.size();
  return n;
}

SiameseModel::SiameseModel(const ModelConfig& config) : config_(config) {
  config_.branch.validate();
  if (config_.gem_p < 1.0) throw ValidationError("gem_p must be >= 1");
  Rng rng(config_.seed);
  ground_ = Branch(config_.branch, rng);
  satellite_ = Branch(config_.branch, rng);
}

std::vector<NamedTensor> SiameseModel::named_parameters() {
  std::vector<NamedTensor> out;
  auto add_branch = [&out](const std::string& prefix, Branch& branch) {
    int k = 1;
    for (ConvBlock& b : branch.blocks()) {
      const std::string base = prefix + ".block" + std::to_string(k);
      out.push_back({base + ".conv.weight", &b.conv.weight});
      out.push_back({base + ".conv.bias", &b.conv.bias});
      out.push_back({base + ".bn.gamma", &b.bn.gamma});
      out.push_back({base + ".bn.beta", &b.bn.beta});
      ++k;
    }
  };
  add_branch("ground", ground_);
  add_branch("satellite", satellite_);
  return out;
}

std::vector<NamedTensor> SiameseModel::named_buffers() {
  std::vector<NamedTensor> out;
  auto add_branch = [&out](const std::string& prefix, Branch& branch) {
    int k = 1;
    for (ConvBlock& b : branch.blocks()) {
      const std::string base = prefix + ".block" + std::to_string(k);
      out.push_back({base + ".bn.running_mean", &b.bn.running_mean});
      out.push_back({base + ".bn.running_var", &b.bn.running_var});
      ++k;
    }
  };
  add_branch("ground", ground_);
  add_branch("satellite", satellite_);
  return out;
}

int64_t SiameseModel::count_parameters() const {
  return ground_.parameter_count() + satellite_.parameter_count();
}

void SiameseModel::enable_grads() {
  for (NamedTensor& p : named_parameters()) p.tensor->enable_grad();
}

void SiameseModel::zero_grads() {
  for (NamedTensor& p : named_parameters()) p.tensor->zero_grad();
}

Tensor SiameseModel::embed_batch(const Tensor& images, const OrientationMap& uv, View side,
                                 Mode mode) {
  Branch& branch = side == View::kGround ? ground_ : satellite_;
  BranchForward fw = branch.forward(images, uv, mode, config_.gem_p, false);
  return std::move(fw.embeddings);
}

Tensor SiameseModel::embed(const ImageBuffer& image, const OrientationMap& uv, View side,
                           Mode mode) {
  Tensor batch({1, 3, image.height, image.width});
  write_image_planes(image, batch, 0);
  Tensor rows = embed_batch(batch, uv, side, mode);
  Tensor vec({rows.dim(1)});
  for (int i = 0; i < rows.dim(1); ++i) vec[i] = rows[i];
  return vec;
}

Tensor aggregate_multiscale(const std::vector<const Tensor*>& maps) {
  if (maps.size() != 3) throw std::invalid_argument("aggregate_multiscale: expected 3 feature maps");
  const Tensor& base = *maps[0];
  Tensor r1 = resize_bilinear(*maps[1], base.dim(2), base.dim(3));
  Tensor r2 = resize_bilinear(*maps[2], base.dim(2), base.dim(3));
  return concat_channels({&base, &r1, &r2});
}

void write_image_planes(const ImageBuffer& image, Tensor& dst, int n) {
  const int H = image.height, W = image.width;
  if (dst.ndim() != 4 || dst.dim(2) != H || dst.dim(3) != W || dst.dim(1) < 3)
    throw std::invalid_argument("write_image_planes: tensor/image shape mismatch");
  const int64_t plane = static_cast<int64_t>(H) * W;
  double* base = dst.data() + dst.offset4(n, 0, 0, 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) base[c * plane + y * W + x] = image.at(y, x, c);
}

}  // namespace crossview
