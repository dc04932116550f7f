#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "crossview/geometry.hpp"
#include "crossview/image.hpp"
#include "crossview/tensor.hpp"

namespace crossview {

// Retrieval database: unit-norm descriptor rows keyed by id, with optional
// geo-positions. Immutable once built; safe for concurrent readers.
struct EmbeddingIndex {
  std::vector<std::string> ids;
  Tensor matrix;  // N x D
  std::vector<std::array<double, 2>> positions;  // (lat, lon) per row, or empty

  int64_t count() const { return matrix.ndim() == 2 ? matrix.dim(0) : 0; }
  int dim() const { return matrix.ndim() == 2 ? matrix.dim(1) : 0; }
  bool has_positions() const { return !positions.empty(); }
};

EmbeddingIndex build_index(std::vector<std::string> ids, Tensor matrix,
                           std::vector<std::array<double, 2>> positions = {});

// Binary format: magic "CVXI", version, N, D, flags, length-prefixed UTF-8 id
// table, row-major float32 little-endian matrix, optional float64 positions.
void save_index(const std::string& path, const EmbeddingIndex& index);
EmbeddingIndex load_index(const std::string& path);

struct Neighbor {
  int index;
  double squared_distance;
};

// Exhaustive scan, ascending squared L2, ties broken by insertion order.
// Returns min(k, N) neighbors.
std::vector<Neighbor> top_k(const EmbeddingIndex& index, const double* query, int k);
std::vector<Neighbor> top_k(const EmbeddingIndex& index, const Tensor& query, int k);

inline int top1percent_k(int64_t n) { return static_cast<int>((n + 99) / 100); }

struct RecallReport {
  int64_t n_database = 0;
  int k_top1percent = 0;
  std::vector<int> ks;          // literal Ks followed by K_top1percent
  std::vector<double> recalls;  // parallel to ks

  double recall_at(int k) const;
};

// Fraction of queries whose single ground-truth id ranks inside the top K,
// for each literal K and for K = ceil(N/100).
RecallReport recall_at_k(const EmbeddingIndex& index, const Tensor& queries,
                         const std::vector<std::string>& ground_truth_ids,
                         const std::vector<int>& ks = {1, 5, 10});

// A query localizes when any of its top-N retrieved tiles lies within radius
// meters of the query's true position.
double localization_recall(const EmbeddingIndex& index, const Tensor& queries,
                           const std::vector<std::array<double, 2>>& query_positions, int n_top,
                           double radius_m = 5.0);

// Great-circle distance in meters on the mean-radius sphere (6371008.8 m).
double haversine_m(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

struct NoiseSweepReport {
  std::vector<double> levels_deg;
  std::vector<RecallReport> reports;  // one per level, in level order
};

// Batch embedder supplied by the caller: panoramas -> N x D unit rows.
using PanoramaEmbedFn = std::function<Tensor(const std::vector<ImageBuffer>&)>;

// For each error level e, every query panorama is circularly shifted by a
// seeded uniform angle in [-e, +e] (U-V maps untouched) before embedding, and
// recalls are recomputed against the fixed satellite index.
NoiseSweepReport north_noise_sweep(const PanoramaEmbedFn& embed,
                                   const std::vector<ImageBuffer>& panoramas,
                                   const std::vector<std::string>& ground_truth_ids,
                                   const EmbeddingIndex& satellite_index,
                                   const std::vector<double>& levels_deg, uint64_t seed,
                                   const std::vector<int>& ks = {1, 5, 10});

// Report emission for external plotting.
std::string recall_report_json(const RecallReport& report);
std::string recall_report_csv(const RecallReport& report);
std::string sweep_report_json(const NoiseSweepReport& report);
std::string sweep_report_csv(const NoiseSweepReport& report);

}  // namespace crossview
