#include "crossview/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "crossview/errors.hpp"
#include "crossview/rng.hpp"

namespace crossview {

namespace {

constexpr char kMagic[4] = {'C', 'V', 'X', 'I'};
constexpr uint32_t kVersion = 1;
constexpr double kNormTolerance = 1e-5;
constexpr double kEarthRadiusM = 6371008.8;

void check_norms(const Tensor& matrix) {
  const int64_t n = matrix.ndim() == 2 ? matrix.dim(0) : -1;
  if (n < 0) throw ValidationError("index: matrix must be 2-d");
  const int d = matrix.dim(1);
  for (int64_t r = 0; r < n; ++r) {
    const double* row = matrix.data() + r * d;
    double sq = 0.0;
    for (int i = 0; i < d; ++i) sq += row[i] * row[i];
    if (std::abs(std::sqrt(sq) - 1.0) > kNormTolerance)
      throw ValidationError("index: row " + std::to_string(r) + " is not unit-norm");
  }
}

double row_squared_distance(const double* a, const double* b, int d) {
  double acc = 0.0;
  for (int i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

// Rank of the ground-truth row under the (distance, insertion order) total
// order; equals the number of rows ranked strictly ahead of it.
int64_t rank_of(const EmbeddingIndex& index, const double* query, int64_t gt_row) {
  const int d = index.dim();
  const double gt_dist = row_squared_distance(query, index.matrix.data() + gt_row * d, d);
  int64_t rank = 0;
  const int64_t n = index.count();
  for (int64_t r = 0; r < n; ++r) {
    const double dist = row_squared_distance(query, index.matrix.data() + r * d, d);
    if (dist < gt_dist || (dist == gt_dist && r < gt_row)) ++rank;
  }
  return rank;
}

}  // namespace

EmbeddingIndex build_index(std::vector<std::string> ids, Tensor matrix,
                           std::vector<std::array<double, 2>> positions) {
  if (matrix.ndim() != 2) throw ValidationError("index: matrix must be N x D");
  if (static_cast<int64_t>(ids.size()) != matrix.dim(0))
    throw ValidationError("index: id count does not match row count");
  if (!positions.empty() && positions.size() != ids.size())
    throw ValidationError("index: position count does not match row count");
  std::unordered_set<std::string> seen;
  for (const std::string& id : ids)
    if (!seen.insert(id).second) throw ValidationError("index: duplicate id '" + id + "'");
  check_norms(matrix);
  EmbeddingIndex index;
  index.ids = std::move(ids);
  index.matrix = std::move(matrix);
  index.positions = std::move(positions);
  return index;
}

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<char*>(b), 8);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw ValidationError("index: truncated file");
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw ValidationError("index: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_index(const std::string& path, const EmbeddingIndex& index) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("index: cannot open for write: " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u64(os, static_cast<uint64_t>(index.count()));
  put_u32(os, static_cast<uint32_t>(index.dim()));
  put_u32(os, index.has_positions() ? 1u : 0u);
  for (const std::string& id : index.ids) {
    put_u32(os, static_cast<uint32_t>(id.size()));
    os.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  const int64_t total = index.count() * index.dim();
  for (int64_t i = 0; i < total; ++i) {
    const float f = static_cast<float>(index.matrix[i]);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(os, bits);
  }
  if (index.has_positions()) {
    for (const auto& p : index.positions) {
      for (double v : p) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(os, bits);
      }
    }
  }
  if (!os) throw IoError("index: write failure: " + path);
}

EmbeddingIndex load_index(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("index: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw ValidationError("index: bad magic in " + path);
  const uint32_t version = get_u32(is);
  if (version != kVersion) throw ValidationError("index: unsupported version");
  const uint64_t n = get_u64(is);
  const uint32_t d = get_u32(is);
  const uint32_t flags = get_u32(is);

  EmbeddingIndex index;
  index.ids.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    const uint32_t len = get_u32(is);
    std::string id(len, '\0');
    is.read(id.data(), len);
    if (!is) throw ValidationError("index: truncated id table");
    index.ids.push_back(std::move(id));
  }
  index.matrix = Tensor({static_cast<int>(n), static_cast<int>(d)});
  const int64_t total = static_cast<int64_t>(n) * d;
  for (int64_t i = 0; i < total; ++i) {
    const uint32_t bits = get_u32(is);
    float f;
    std::memcpy(&f, &bits, 4);
    index.matrix[i] = static_cast<double>(f);
  }
  if (flags & 1u) {
    index.positions.resize(n);
    for (uint64_t i = 0; i < n; ++i) {
      for (int j = 0; j < 2; ++j) {
        const uint64_t bits = get_u64(is);
        double v;
        std::memcpy(&v, &bits, 8);
        index.positions[i][static_cast<size_t>(j)] = v;
      }
    }
  }
  if (n > 0) check_norms(index.matrix);
  std::unordered_set<std::string> seen;
  for (const std::string& id : index.ids)
    if (!seen.insert(id).second) throw ValidationError("index: duplicate id '" + id + "'");
  return index;
}

std::vector<Neighbor> top_k(const EmbeddingIndex& index, const double* query, int k) {
  if (k < 1) throw std::invalid_argument("top_k: k must be >= 1");
  const int64_t n = index.count();
  const int d = index.dim();
  std::vector<double> dist(static_cast<size_t>(n));
  for (int64_t r = 0; r < n; ++r)
    dist[static_cast<size_t>(r)] = row_squared_distance(query, index.matrix.data() + r * d, d);
  const int64_t take = std::min<int64_t>(k, n);
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + take, order.end(), [&dist](int a, int b) {
    const double da = dist[static_cast<size_t>(a)], db = dist[static_cast<size_t>(b)];
    return da < db || (da == db && a < b);
  });
  std::vector<Neighbor> out;
  out.reserve(static_cast<size_t>(take));
  for (int64_t i = 0; i < take; ++i)
    out.push_back({order[static_cast<size_t>(i)], dist[static_cast<size_t>(order[static_cast<size_t>(i)])]});
  return out;
}

std::vector<Neighbor> top_k(const EmbeddingIndex& index, const Tensor& query, int k) {
  if (query.ndim() != 1 || query.dim(0) != index.dim())
    throw std::invalid_argument("top_k: query dim mismatch");
  return top_k(index, query.data(), k);
}

double RecallReport::recall_at(int k) const {
  for (size_t i = 0; i < ks.size(); ++i)
    if (ks[i] == k) return recalls[i];
  throw std::invalid_argument("recall_at: K " + std::to_string(k) + " not in report");
}

RecallReport recall_at_k(const EmbeddingIndex& index, const Tensor& queries,
                         const std::vector<std::string>& ground_truth_ids,
                         const std::vector<int>& ks) {
  if (queries.ndim() != 2 || queries.dim(1) != index.dim())
    throw ValidationError("recall_at_k: query matrix dim mismatch");
  if (static_cast<size_t>(queries.dim(0)) != ground_truth_ids.size())
    throw ValidationError("recall_at_k: one ground-truth id per query required");
  std::unordered_map<std::string, int64_t> row_of;
  for (size_t i = 0; i < index.ids.size(); ++i) row_of[index.ids[i]] = static_cast<int64_t>(i);

  RecallReport report;
  report.n_database = index.count();
  report.k_top1percent = top1percent_k(index.count());
  report.ks = ks;
  report.ks.push_back(report.k_top1percent);

  const int nq = queries.dim(0);
  std::vector<int64_t> ranks(static_cast<size_t>(nq));
  for (int q = 0; q < nq; ++q) {
    auto it = row_of.find(ground_truth_ids[static_cast<size_t>(q)]);
    if (it == row_of.end())
      throw ValidationError("recall_at_k: ground-truth id '" + ground_truth_ids[static_cast<size_t>(q)] +
                            "' not in index");
    ranks[static_cast<size_t>(q)] =
        rank_of(index, queries.data() + static_cast<int64_t>(q) * index.dim(), it->second);
  }
  for (int k : report.ks) {
    int64_t hits = 0;
    for (int64_t r : ranks)
      if (r < k) ++hits;
    report.recalls.push_back(nq > 0 ? static_cast<double>(hits) / nq : 0.0);
  }
  return report;
}

double localization_recall(const EmbeddingIndex& index, const Tensor& queries,
                           const std::vector<std::array<double, 2>>& query_positions, int n_top,
                           double radius_m) {
  if (!index.has_positions())
    throw ValidationError("localization_recall: index has no positions");
  if (queries.ndim() != 2 || static_cast<size_t>(queries.dim(0)) != query_positions.size())
    throw ValidationError("localization_recall: one position per query required");
  if (n_top < 1) throw std::invalid_argument("localization_recall: n_top must be >= 1");
  const int nq = queries.dim(0);
  int64_t hits = 0;
  for (int q = 0; q < nq; ++q) {
    const auto& pos = query_positions[static_cast<size_t>(q)];
    for (const Neighbor& nb : top_k(index, queries.data() + static_cast<int64_t>(q) * index.dim(), n_top)) {
      const auto& tile = index.positions[static_cast<size_t>(nb.index)];
      if (haversine_m(pos[0], pos[1], tile[0], tile[1]) <= radius_m) {
        ++hits;
        break;
      }
    }
  }
  return nq > 0 ? static_cast<double>(hits) / nq : 0.0;
}

double haversine_m(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
  for (double lat : {lat1_deg, lat2_deg})
    if (lat < -90.0 || lat > 90.0) throw std::invalid_argument("haversine: latitude out of range");
  for (double lon : {lon1_deg, lon2_deg})
    if (lon < -180.0 || lon > 180.0) throw std::invalid_argument("haversine: longitude out of range");
  const double deg = M_PI / 180.0;
  const double lat1 = lat1_deg * deg, lat2 = lat2_deg * deg;
  const double dlat = (lat2_deg - lat1_deg) * deg;
  const double dlon = (lon2_deg - lon1_deg) * deg;
  const double sl = std::sin(dlat / 2.0), so = std::sin(dlon / 2.0);
  double a = sl * sl + std::cos(lat1) * std::cos(lat2) * so * so;
  a = std::min(1.0, std::max(0.0, a));
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(a));
}

NoiseSweepReport north_noise_sweep(const PanoramaEmbedFn& embed,
                                   const std::vector<ImageBuffer>& panoramas,
                                   const std::vector<std::string>& ground_truth_ids,
                                   const EmbeddingIndex& satellite_index,
                                   const std::vector<double>& levels_deg, uint64_t seed,
                                   const std::vector<int>& ks) {
  for (size_t i = 1; i < levels_deg.size(); ++i)
    if (levels_deg[i] <= levels_deg[i - 1])
      throw ValidationError("north_noise_sweep: levels must be strictly ascending");
  if (panoramas.size() != ground_truth_ids.size())
    throw ValidationError("north_noise_sweep: one ground-truth id per panorama required");

  NoiseSweepReport report;
  report.levels_deg = levels_deg;
  const Rng base(seed);
  for (size_t li = 0; li < levels_deg.size(); ++li) {
    Rng rng = base.fork(li);
    const double level = levels_deg[li];
    std::vector<ImageBuffer> shifted;
    shifted.reserve(panoramas.size());
    for (const ImageBuffer& pano : panoramas) {
      const double angle = level > 0.0 ? rng.uniform(-level, level) : 0.0;
      shifted.push_back(circular_shift_panorama(pano, degrees_to_columns(angle, pano.width)));
    }
    Tensor embeddings = embed(shifted);
    report.reports.push_back(recall_at_k(satellite_index, embeddings, ground_truth_ids, ks));
  }
  return report;
}

namespace {

nlohmann::json recall_to_json(const RecallReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (size_t i = 0; i < r.ks.size(); ++i) {
    const bool is_top1pct = i == r.ks.size() - 1;
    entries.push_back({{"label", is_top1pct ? "r@top1%" : "r@" + std::to_string(r.ks[i])},
                       {"k", r.ks[i]},
                       {"recall", r.recalls[i]}});
  }
  return {{"n_database", r.n_database}, {"k_top1percent", r.k_top1percent}, {"recalls", entries}};
}

}  // namespace

std::string recall_report_json(const RecallReport& report) {
  return recall_to_json(report).dump(2) + "\n";
}

std::string recall_report_csv(const RecallReport& report) {
  std::ostringstream os;
  os << "label,k,recall\n";
  for (size_t i = 0; i < report.ks.size(); ++i) {
    const bool is_top1pct = i == report.ks.size() - 1;
    os << (is_top1pct ? "r@top1%" : "r@" + std::to_string(report.ks[i])) << ',' << report.ks[i]
       << ',' << report.recalls[i] << "\n";
  }
  return os.str();
}

std::string sweep_report_json(const NoiseSweepReport& report) {
  nlohmann::json levels = nlohmann::json::array();
  for (size_t i = 0; i < report.levels_deg.size(); ++i)
    levels.push_back({{"level_deg", report.levels_deg[i]}, {"report", recall_to_json(report.reports[i])}});
  return nlohmann::json{{"levels", levels}}.dump(2) + "\n";
}

std::string sweep_report_csv(const NoiseSweepReport& report) {
  std::ostringstream os;
  os << "level_deg,label,k,recall\n";
  for (size_t i = 0; i < report.levels_deg.size(); ++i) {
    const RecallReport& r = report.reports[i];
    for (size_t j = 0; j < r.ks.size(); ++j) {
      const bool is_top1pct = j == r.ks.size() - 1;
      os << report.levels_deg[i] << ',' << (is_top1pct ? "r@top1%" : "r@" + std::to_string(r.ks[j]))
         << ',' << r.ks[j] << ',' << r.recalls[j] << "\n";
    }
  }
  return os.str();
}

}  // namespace crossview
