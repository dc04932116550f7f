#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crossview/rng.hpp"

namespace crossview {

enum class Split { kTrain, kTest };

std::string split_name(Split s);

// One ground-panorama / satellite-tile pair. Paths are stored as written in
// the manifest and resolved against the manifest's directory.
struct PairRecord {
  std::string id;
  std::string ground_path;
  std::string satellite_path;
  std::optional<double> lat;
  std::optional<double> lon;
  Split split = Split::kTrain;

  bool has_position() const { return lat.has_value() && lon.has_value(); }
};

// CSV with header exactly `id,ground,satellite,lat,lon,split`. Duplicate ids
// and out-of-range coordinates are validation errors; malformed rows are parse
// errors carrying the line number. With check_paths, referenced image files
// must exist relative to the manifest.
std::vector<PairRecord> load_manifest(const std::string& path, bool check_paths = true);

void write_manifest(const std::string& path, const std::vector<PairRecord>& records);

std::string resolve_manifest_path(const std::string& manifest_path, const std::string& rel);

std::vector<PairRecord> filter_split(const std::vector<PairRecord>& records, Split split);

// One training batch: record indices plus the panorama column shift drawn for
// each (0 when augmentation is off; U-V maps are never shifted).
struct BatchPlan {
  std::vector<int> indices;
  std::vector<long> shifts;
};

// Seeded epoch-wise shuffling; drops the final short batch when drop_last is
// set so the exhaustive miner always sees full batches. The shift stream and
// the shuffle share one generator, so a seed fixes the whole schedule.
class BatchIterator {
 public:
  BatchIterator(int n_records, int batch_size, uint64_t seed, bool augment, int pano_width,
                bool drop_last = true);

  BatchPlan next();
  int batches_per_epoch() const;
  int64_t epoch() const { return epoch_; }

 private:
  void start_epoch();

  int n_records_;
  int batch_size_;
  bool augment_;
  int pano_width_;
  bool drop_last_;
  Rng rng_;
  std::vector<int> order_;
  size_t pos_ = 0;
  int64_t epoch_ = -1;
};

}  // namespace crossview
