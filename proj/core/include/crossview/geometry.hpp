#pragma once

#include <vector>

#include "crossview/image.hpp"
#include "crossview/tensor.hpp"

namespace crossview {

// Shared azimuth convention for both views: north = 0, east = +pi/2 (clockwise
// seen from above). The panorama's center column looks due north; the
// satellite tile is north-up. Datasets must align ground heading with tile up.
enum class View { kGround, kSatellite };

// Per-pixel orientation raster, both channels normalized:
//   ground:    u = azimuth/pi in [-1,1), v = altitude/(pi/2) in (-1,1)
//   satellite: u = polar azimuth/pi in [-1,1), v = range/r_corner in [0,1]
struct OrientationMap {
  View view = View::kGround;
  int height = 0;
  int width = 0;
  std::vector<double> u;  // H*W row-major
  std::vector<double> v;

  double u_at(int y, int x) const { return u[static_cast<size_t>(y) * width + x]; }
  double v_at(int y, int x) const { return v[static_cast<size_t>(y) * width + x]; }
};

// Equirectangular panorama map: column centers sample azimuth uniformly over
// [-pi, pi), row centers sample altitude over (-pi/2, pi/2).
OrientationMap ground_orientation_map(int width, int height);

// Polar overhead map about the pixel-grid center; range normalized by the
// center-to-corner distance. Azimuth at the exact center is defined as 0.
OrientationMap satellite_orientation_map(int width, int height);

// Nearest-neighbor stride subsampling (top-left sample per cell); output dims
// ceil(in/factor). Nearest-neighbor avoids averaging across the +-pi seam.
OrientationMap downsample_uv(const OrientationMap& map, int factor);

// Rotates panorama columns: output column x takes input column (x-shift) mod W.
// Models a wrong north estimate, so the associated U-V map is never shifted.
ImageBuffer circular_shift_panorama(const ImageBuffer& image, long shift);

// North-error degrees -> whole panorama columns.
long degrees_to_columns(double angle_deg, int width);

// Writes the two orientation planes into channels [c0, c0+1) of batch slot n
// of an NCHW tensor.
void write_uv_planes(const OrientationMap& map, Tensor& dst, int n, int c0);

// 8-bit export with the linear mapping [-1,1] -> [0,255]; two channels
// (gray+alpha in PNG terms) or a hue/saturation color coding for figures.
RasterU8 uv_to_raster(const OrientationMap& map);
RasterU8 uv_to_color_raster(const OrientationMap& map);

}  // namespace crossview
