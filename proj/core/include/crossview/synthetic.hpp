#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crossview/dataset.hpp"

namespace crossview {

// Procedural cross-view world: each location scatters colored landmarks in an
// annulus around the observer and renders them consistently into a north-up
// overhead tile (disks at polar offsets) and a north-aligned equirectangular
// panorama (rectangles at the bearing's column, placement shrinking with
// range). Geometric fidelity carries the matching signal; colors come from a
// small palette so appearance alone underdetermines the location.
struct SyntheticWorldConfig {
  int n_locations = 600;
  int n_train = 400;
  int landmarks_per_location = 6;
  int pano_width = 128;
  int pano_height = 64;
  int sat_width = 112;
  int sat_height = 112;
  double meters_per_pixel = 0.12;
  double min_landmark_range_m = 5.0;
  double max_landmark_range_m = 6.0;
  double noise_level = 0.05;  // in [0,1]; per-pixel Gaussian, sigma = level * 127.5 bytes
  uint64_t seed = 0;

  void validate() const;
};

struct Landmark {
  double bearing_rad;  // [0, 2*pi), 0 = north
  double range_m;
  double size_m;
  int color;  // palette index
};

struct LocationInfo {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  std::vector<Landmark> landmarks;
};

struct SyntheticWorld {
  std::vector<PairRecord> records;     // as written to the manifest
  std::vector<LocationInfo> locations; // geometry bookkeeping for verification
  std::string manifest_path;
};

// Writes ground/<id>.png, satellite/<id>.png, and manifest.csv under out_dir.
// Fully seeded; identical configs produce byte-identical trees.
SyntheticWorld generate_synthetic_world(const SyntheticWorldConfig& cfg, const std::string& out_dir);

// Landmark centers under the shared azimuth convention, used by rendering and
// by the correspondence checks.
double pano_center_column(double bearing_rad, int pano_width);
std::pair<double, double> sat_center_pixel(double bearing_rad, double range_m,
                                           const SyntheticWorldConfig& cfg);  // (x, y)

// Fixed saturated palette shared by both views.
int palette_size();
void palette_color(int index, uint8_t rgb[3]);

}  // namespace crossview
