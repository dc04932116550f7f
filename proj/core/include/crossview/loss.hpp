#pragma once

#include <vector>

#include "crossview/tensor.hpp"

namespace crossview {

struct LossParams {
  double alpha = 10.0;
};

// Matched cross-view embeddings: row i of each matrix is pair i.
struct TripletBatch {
  Tensor ground;     // B x D
  Tensor satellite;  // B x D
};

// One mined triplet. Indices address rows of the batch; the anchor and the
// negative live on opposite sides, the positive is the anchor's matched row.
struct Triplet {
  enum class Side { kGround, kSatellite };
  Side anchor_side;
  int anchor;
  int positive;
  int negative;

  bool operator==(const Triplet& o) const = default;
};

// Exhaustive in-batch mining: every ground anchor against its B-1 satellite
// negatives, then every satellite anchor against its B-1 ground negatives.
// Exactly 2B(B-1) triplets in anchor-major order with negatives ascending.
std::vector<Triplet> exhaustive_triplets(int batch_size);

// log(1 + exp(alpha * delta)) evaluated without overflow for any delta.
double weighted_soft_margin(double delta, double alpha);

// Loss for one triplet of embedding vectors (1-d tensors).
double soft_margin_triplet_loss(const Tensor& anchor, const Tensor& positive,
                                const Tensor& negative, const LossParams& params);

// Mean weighted soft-margin loss over all 2B(B-1) exhaustive triplets.
double batch_loss(const TripletBatch& batch, const LossParams& params);

// Same value, plus gradient accumulation into ground/satellite grad buffers.
double batch_loss_with_grad(TripletBatch& batch, const LossParams& params);

}  // namespace crossview
