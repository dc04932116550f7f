#include "crossview/dataset.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "crossview/errors.hpp"

namespace fs = std::filesystem;

namespace crossview {

std::string split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

namespace {

constexpr const char* kHeader = "id,ground,satellite,lat,lon,split";

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& s, const char* what, int line_no) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError(std::string("manifest: bad ") + what + " value '" + s + "'", line_no);
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string resolve_manifest_path(const std::string& manifest_path, const std::string& rel) {
  fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(manifest_path).parent_path() / p).string();
}

std::vector<PairRecord> load_manifest(const std::string& path, bool check_paths) {
  std::ifstream is(path);
  if (!is) throw IoError("manifest: cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw ParseError("manifest: missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader)
    throw ParseError("manifest: header must be exactly '" + std::string(kHeader) + "'", 1);

  std::vector<PairRecord> records;
  std::unordered_set<std::string> seen;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f = split_fields(line);
    if (f.size() != 6) throw ParseError("manifest: expected 6 fields, got " + std::to_string(f.size()), line_no);

    PairRecord rec;
    rec.id = f[0];
    rec.ground_path = f[1];
    rec.satellite_path = f[2];
    if (rec.id.empty()) throw ParseError("manifest: empty id", line_no);
    if (rec.ground_path.empty() || rec.satellite_path.empty())
      throw ParseError("manifest: empty image path", line_no);

    const bool has_lat = !f[3].empty();
    const bool has_lon = !f[4].empty();
    if (has_lat != has_lon) throw ParseError("manifest: lat/lon must both be present or both empty", line_no);
    if (has_lat) {
      rec.lat = parse_double(f[3], "lat", line_no);
      rec.lon = parse_double(f[4], "lon", line_no);
      if (*rec.lat < -90.0 || *rec.lat > 90.0)
        throw ValidationError("manifest: lat out of range at line " + std::to_string(line_no));
      if (*rec.lon < -180.0 || *rec.lon > 180.0)
        throw ValidationError("manifest: lon out of range at line " + std::to_string(line_no));
    }

    if (f[5] == "train") rec.split = Split::kTrain;
    else if (f[5] == "test") rec.split = Split::kTest;
    else throw ParseError("manifest: split must be train or test, got '" + f[5] + "'", line_no);

    if (!seen.insert(rec.id).second) throw ValidationError("manifest: duplicate id '" + rec.id + "'");

    if (check_paths) {
      for (const std::string* p : {&rec.ground_path, &rec.satellite_path}) {
        const std::string resolved = resolve_manifest_path(path, *p);
        if (!fs::exists(resolved))
          throw ValidationError("manifest: missing image file: " + resolved);
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_manifest(const std::string& path, const std::vector<PairRecord>& records) {
  std::ofstream os(path, std::ios::binary);  // binary: keep '\n' endings everywhere
  if (!os) throw IoError("manifest: cannot open for write: " + path);
  os << kHeader << "\n";
  for (const PairRecord& r : records) {
    os << r.id << ',' << r.ground_path << ',' << r.satellite_path << ',';
    if (r.lat) os << format_double(*r.lat);
    os << ',';
    if (r.lon) os << format_double(*r.lon);
    os << ',' << split_name(r.split) << "\n";
  }
  if (!os) throw IoError("manifest: write failure: " + path);
}

std::vector<PairRecord> filter_split(const std::vector<PairRecord>& records, Split split) {
  std::vector<PairRecord> out;
  for (const PairRecord& r : records)
    if (r.split == split) out.push_back(r);
  return out;
}

BatchIterator::BatchIterator(int n_records, int batch_size, uint64_t seed, bool augment,
                             int pano_width, bool drop_last)
    : n_records_(n_records),
      batch_size_(batch_size),
      augment_(augment),
      pano_width_(pano_width),
      drop_last_(drop_last),
      rng_(seed) {
  if (batch_size < 1) throw std::invalid_argument("batch_iterator: batch size must be >= 1");
  if (n_records < 1) throw ValidationError("batch_iterator: empty record set");
  if (augment && pano_width < 1)
    throw std::invalid_argument("batch_iterator: panorama width required for augmentation");
  if (batches_per_epoch() == 0)
    throw ValidationError("batch_iterator: fewer records (" + std::to_string(n_records) +
                          ") than batch size (" + std::to_string(batch_size) + ")");
  order_.resize(static_cast<size_t>(n_records));
  for (int i = 0; i < n_records; ++i) order_[static_cast<size_t>(i)] = i;
}

int BatchIterator::batches_per_epoch() const {
  if (drop_last_) return n_records_ / batch_size_;
  return (n_records_ + batch_size_ - 1) / batch_size_;
}

void BatchIterator::start_epoch() {
  rng_.shuffle(order_);
  pos_ = 0;
  ++epoch_;
}

BatchPlan BatchIterator::next() {
  const size_t remaining = order_.size() - pos_;
  const size_t need = drop_last_ ? static_cast<size_t>(batch_size_) : 1;
  if (epoch_ < 0 || remaining < need) start_epoch();

  BatchPlan plan;
  const size_t take = std::min(static_cast<size_t>(batch_size_), order_.size() - pos_);
  plan.indices.reserve(take);
  plan.shifts.reserve(take);
  for (size_t i = 0; i < take; ++i) {
    plan.indices.push_back(order_[pos_ + i]);
    plan.shifts.push_back(augment_ ? static_cast<long>(rng_.below(static_cast<uint64_t>(pano_width_)))
                                   : 0L);
  }
  pos_ += take;
  return plan;
}

}  // namespace crossview
