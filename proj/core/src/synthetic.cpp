#include "crossview/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "crossview/errors.hpp"
#include "crossview/image.hpp"
#include "crossview/rng.hpp"

namespace fs = std::filesystem;

namespace crossview {

namespace {

constexpr double kCameraHeightM = 1.6;
constexpr double kGridSpacingM = 30.0;  // >= 20 m between locations
constexpr double kMetersPerDegree = 6371008.8 * M_PI / 180.0;

const uint8_t kPalette[][3] = {
    {230, 60, 60},  {60, 200, 60},  {70, 90, 230},  {235, 200, 50},
    {200, 60, 200}, {60, 210, 210}, {240, 140, 40}, {245, 245, 245},
};
const uint8_t kSatBackground[3] = {46, 52, 40};
const uint8_t kSkyColor[3] = {150, 180, 210};
const uint8_t kGroundColor[3] = {85, 70, 55};

double wrap_to_pi(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

void add_noise(RasterU8& raster, double sigma_bytes, Rng& rng) {
  if (sigma_bytes <= 0.0) return;
  for (uint8_t& b : raster.pixels) {
    const double v = b + rng.normal() * sigma_bytes;
    b = static_cast<uint8_t>(std::min(255.0, std::max(0.0, std::round(v))));
  }
}

void fill_rect_wrapped(RasterU8& img, double x_center, double half_w, int y0, int y1,
                       const uint8_t rgb[3]) {
  const int W = img.width;
  y0 = std::max(0, y0);
  y1 = std::min(img.height - 1, y1);
  const int x_lo = static_cast<int>(std::floor(x_center - half_w));
  const int x_hi = static_cast<int>(std::ceil(x_center + half_w));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      const int xm = ((x % W) + W) % W;
      for (int c = 0; c < 3; ++c) img.at(y, xm, c) = rgb[c];
    }
  }
}

void fill_disk(RasterU8& img, double cx, double cy, double radius, const uint8_t rgb[3]) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + radius)));
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= r2)
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = rgb[c];
    }
  }
}

RasterU8 render_panorama(const LocationInfo& loc, const SyntheticWorldConfig& cfg) {
  RasterU8 img;
  img.height = cfg.pano_height;
  img.width = cfg.pano_width;
  img.channels = 3;
  img.pixels.resize(static_cast<size_t>(img.height) * img.width * 3);
  // Horizon sits at altitude 0, i.e. between rows (H-1)/2 and (H+1)/2.
  const double horizon = cfg.pano_height / 2.0;
  for (int y = 0; y < img.height; ++y) {
    const uint8_t* bg = y < horizon ? kSkyColor : kGroundColor;
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = bg[c];
  }
  const double px_per_rad_y = cfg.pano_height / M_PI;
  const double px_per_rad_x = cfg.pano_width / (2.0 * M_PI);
  for (const Landmark& lm : loc.landmarks) {
    const double col = pano_center_column(lm.bearing_rad, cfg.pano_width);
    const double ang_size = lm.size_m / lm.range_m;
    const double half_w = 0.5 * ang_size * px_per_rad_x;
    // Base rests on the ground: altitude -atan(h_cam / range).
    const double base_alt = -std::atan2(kCameraHeightM, lm.range_m);
    const double base_row = (M_PI / 2.0 - base_alt) * px_per_rad_y - 0.5;
    const double top_row = base_row - ang_size * px_per_rad_y;
    fill_rect_wrapped(img, col, half_w, static_cast<int>(std::round(top_row)),
                      static_cast<int>(std::round(base_row)), kPalette[lm.color]);
  }
  return img;
}

RasterU8 render_overhead(const LocationInfo& loc, const SyntheticWorldConfig& cfg) {
  RasterU8 img;
  img.height = cfg.sat_height;
  img.width = cfg.sat_width;
  img.channels = 3;
  img.pixels.resize(static_cast<size_t>(img.height) * img.width * 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = kSatBackground[c];
  for (const Landmark& lm : loc.landmarks) {
    auto [cx, cy] = sat_center_pixel(lm.bearing_rad, lm.range_m, cfg);
    const double radius = std::max(1.5, 0.5 * lm.size_m / cfg.meters_per_pixel);
    fill_disk(img, cx, cy, radius, kPalette[lm.color]);
  }
  return img;
}

}  // namespace

void SyntheticWorldConfig::validate() const {
  if (n_locations < 1) throw ValidationError("synthetic: n_locations must be >= 1");
  if (n_train < 0 || n_train > n_locations)
    throw ValidationError("synthetic: n_train must be in [0, n_locations]");
  if (landmarks_per_location < 1) throw ValidationError("synthetic: need >= 1 landmark per location");
  if (pano_width < 2 || pano_height < 2 || sat_width < 2 || sat_height < 2)
    throw ValidationError("synthetic: image dims must be >= 2");
  if (meters_per_pixel <= 0.0) throw ValidationError("synthetic: meters_per_pixel must be positive");
  if (min_landmark_range_m <= 0.0 || max_landmark_range_m <= min_landmark_range_m)
    throw ValidationError("synthetic: landmark range interval is empty");
  const double half_extent = 0.5 * std::min(sat_width, sat_height) * meters_per_pixel;
  if (max_landmark_range_m > half_extent)
    throw ValidationError("synthetic: max landmark range exceeds overhead half-extent");
  if (noise_level < 0.0 || noise_level > 1.0)
    throw ValidationError("synthetic: noise_level must be in [0,1]");
}

double pano_center_column(double bearing_rad, int pano_width) {
  const double theta = wrap_to_pi(bearing_rad);
  return (theta + M_PI) * pano_width / (2.0 * M_PI) - 0.5;
}

std::pair<double, double> sat_center_pixel(double bearing_rad, double range_m,
                                           const SyntheticWorldConfig& cfg) {
  const double cx = (cfg.sat_width - 1) / 2.0;
  const double cy = (cfg.sat_height - 1) / 2.0;
  const double r_px = range_m / cfg.meters_per_pixel;
  return {cx + std::sin(bearing_rad) * r_px, cy - std::cos(bearing_rad) * r_px};
}

int palette_size() { return static_cast<int>(sizeof(kPalette) / sizeof(kPalette[0])); }

void palette_color(int index, uint8_t rgb[3]) {
  for (int c = 0; c < 3; ++c) rgb[c] = kPalette[index][c];
}

SyntheticWorld generate_synthetic_world(const SyntheticWorldConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "ground", ec);
  fs::create_directories(fs::path(out_dir) / "satellite", ec);
  if (!fs::is_directory(fs::path(out_dir) / "ground") ||
      !fs::is_directory(fs::path(out_dir) / "satellite"))
    throw IoError("synthetic: cannot create output directory: " + out_dir);

  Rng rng(cfg.seed);
  const double sigma = cfg.noise_level * 127.5;
  const int grid_cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.n_locations))));

  SyntheticWorld world;
  world.records.reserve(static_cast<size_t>(cfg.n_locations));
  world.locations.reserve(static_cast<size_t>(cfg.n_locations));

  for (int i = 0; i < cfg.n_locations; ++i) {
    LocationInfo loc;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "loc_%05d", i);
    loc.id = idbuf;
    loc.lat = (i / grid_cols) * kGridSpacingM / kMetersPerDegree;
    loc.lon = (i % grid_cols) * kGridSpacingM / kMetersPerDegree;
    loc.landmarks.reserve(static_cast<size_t>(cfg.landmarks_per_location));
    for (int k = 0; k < cfg.landmarks_per_location; ++k) {
      Landmark lm;
      lm.bearing_rad = rng.uniform(0.0, 2.0 * M_PI);
      lm.range_m = rng.uniform(cfg.min_landmark_range_m, cfg.max_landmark_range_m);
      lm.size_m = rng.uniform(0.8, 1.6);
      lm.color = static_cast<int>(rng.below(static_cast<uint64_t>(palette_size())));
      loc.landmarks.push_back(lm);
    }

    RasterU8 pano = render_panorama(loc, cfg);
    RasterU8 tile = render_overhead(loc, cfg);
    add_noise(pano, sigma, rng);
    add_noise(tile, sigma, rng);

    const std::string ground_rel = "ground/" + loc.id + ".png";
    const std::string sat_rel = "satellite/" + loc.id + ".png";
    save_png((fs::path(out_dir) / ground_rel).string(), pano);
    save_png((fs::path(out_dir) / sat_rel).string(), tile);

    PairRecord rec;
    rec.id = loc.id;
    rec.ground_path = ground_rel;
    rec.satellite_path = sat_rel;
    rec.lat = loc.lat;
    rec.lon = loc.lon;
    rec.split = i < cfg.n_train ? Split::kTrain : Split::kTest;
    world.records.push_back(std::move(rec));
    world.locations.push_back(std::move(loc));
  }

  world.manifest_path = (fs::path(out_dir) / "manifest.csv").string();
  write_manifest(world.manifest_path, world.records);
  return world;
}

}  // namespace crossview
