#include "crossview/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace crossview {

namespace {

double squared_distance(const double* a, const double* b, int dim) {
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_batch(const TripletBatch& batch) {
  if (batch.ground.ndim() != 2 || batch.satellite.ndim() != 2)
    throw std::invalid_argument("batch_loss: embeddings must be B x D matrices");
  if (batch.ground.dim(0) != batch.satellite.dim(0) || batch.ground.dim(1) != batch.satellite.dim(1))
    throw std::invalid_argument("batch_loss: ground/satellite shape mismatch");
  if (batch.ground.dim(0) < 2) throw std::invalid_argument("batch_loss: batch size must be >= 2");
}

}  // namespace

std::vector<Triplet> exhaustive_triplets(int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("exhaustive_triplets: batch size must be >= 1");
  std::vector<Triplet> out;
  out.reserve(static_cast<size_t>(2) * batch_size * (batch_size - 1));
  for (int i = 0; i < batch_size; ++i)
    for (int j = 0; j < batch_size; ++j)
      if (j != i) out.push_back({Triplet::Side::kGround, i, i, j});
  for (int i = 0; i < batch_size; ++i)
    for (int j = 0; j < batch_size; ++j)
      if (j != i) out.push_back({Triplet::Side::kSatellite, i, i, j});
  return out;
}

double weighted_soft_margin(double delta, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("weighted_soft_margin: alpha must be >= 0");
  const double z = alpha * delta;
  // softplus(z); for large z the direct form overflows, so fold it to
  // z + log1p(exp(-z)).
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double soft_margin_triplet_loss(const Tensor& anchor, const Tensor& positive,
                                const Tensor& negative, const LossParams& params) {
  if (anchor.ndim() != 1 || !anchor.same_shape(positive) || !anchor.same_shape(negative))
    throw std::invalid_argument("soft_margin_triplet_loss: vectors must share one shape");
  const int dim = anchor.dim(0);
  const double d_pos = squared_distance(anchor.data(), positive.data(), dim);
  const double d_neg = squared_distance(anchor.data(), negative.data(), dim);
  return weighted_soft_margin(d_pos - d_neg, params.alpha);
}

namespace {

double batch_loss_impl(TripletBatch& batch, const LossParams& params, bool with_grad) {
  check_batch(batch);
  if (params.alpha < 0.0) throw std::invalid_argument("batch_loss: alpha must be >= 0");
  const int B = batch.ground.dim(0);
  const int D = batch.ground.dim(1);
  const double* g = batch.ground.data();
  const double* s = batch.satellite.data();

  // Pairwise squared distances d2[i*B+j] = |g_i - s_j|^2.
  std::vector<double> d2(static_cast<size_t>(B) * B);
  for (int i = 0; i < B; ++i)
    for (int j = 0; j < B; ++j)
      d2[static_cast<size_t>(i) * B + j] =
          squared_distance(g + static_cast<int64_t>(i) * D, s + static_cast<int64_t>(j) * D, D);

  const double total = static_cast<double>(2 * B * (B - 1));
  const double inv_total = 1.0 / total;
  double* dg = nullptr;
  double* ds = nullptr;
  if (with_grad) {
    batch.ground.enable_grad();
    batch.satellite.enable_grad();
    dg = batch.ground.grad();
    ds = batch.satellite.grad();
  }

  double loss = 0.0;
  for (int i = 0; i < B; ++i) {
    const double pos = d2[static_cast<size_t>(i) * B + i];
    const double* gi = g + static_cast<int64_t>(i) * D;
    const double* si = s + static_cast<int64_t>(i) * D;
    for (int j = 0; j < B; ++j) {
      if (j == i) continue;
      const double z = params.alpha * (pos - d2[static_cast<size_t>(i) * B + j]);
      loss += z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      if (!with_grad) continue;
      const double w = 2.0 * params.alpha * sigmoid(z) * inv_total;
      const double* sj = s + static_cast<int64_t>(j) * D;
      double* dgi = dg + static_cast<int64_t>(i) * D;
      double* dsi = ds + static_cast<int64_t>(i) * D;
      double* dsj = ds + static_cast<int64_t>(j) * D;
      for (int k = 0; k < D; ++k) {
        dgi[k] += w * (sj[k] - si[k]);
        dsi[k] += w * (si[k] - gi[k]);
        dsj[k] += w * (gi[k] - sj[k]);
      }
    }
  }
  for (int i = 0; i < B; ++i) {
    const double pos = d2[static_cast<size_t>(i) * B + i];
    const double* gi = g + static_cast<int64_t>(i) * D;
    const double* si = s + static_cast<int64_t>(i) * D;
    for (int j = 0; j < B; ++j) {
      if (j == i) continue;
      const double z = params.alpha * (pos - d2[static_cast<size_t>(j) * B + i]);
      loss += z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      if (!with_grad) continue;
      const double w = 2.0 * params.alpha * sigmoid(z) * inv_total;
      const double* gj = g + static_cast<int64_t>(j) * D;
      double* dsi = ds + static_cast<int64_t>(i) * D;
      double* dgi = dg + static_cast<int64_t>(i) * D;
      double* dgj = dg + static_cast<int64_t>(j) * D;
      for (int k = 0; k < D; ++k) {
        dsi[k] += w * (gj[k] - gi[k]);
        dgi[k] += w * (gi[k] - si[k]);
        dgj[k] += w * (si[k] - gj[k]);
      }
    }
  }
  return loss * inv_total;
}

}  // namespace

double batch_loss(const TripletBatch& batch, const LossParams& params) {
  return batch_loss_impl(const_cast<TripletBatch&>(batch), params, false);
}

double batch_loss_with_grad(TripletBatch& batch, const LossParams& params) {
  return batch_loss_impl(batch, params, true);
}

}  // namespace crossview
