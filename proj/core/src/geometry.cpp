#include "crossview/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "crossview/errors.hpp"

namespace crossview {

OrientationMap ground_orientation_map(int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("ground_orientation_map: dims must be >= 1");
  OrientationMap map;
  map.view = View::kGround;
  map.height = height;
  map.width = width;
  map.u.resize(static_cast<size_t>(height) * width);
  map.v.resize(static_cast<size_t>(height) * width);
  // theta(x) = 2*pi*(x+0.5)/W - pi, so u = theta/pi = (2x+1)/W - 1.
  // phi(y) = pi/2 - pi*(y+0.5)/H, so v = phi/(pi/2) = 1 - (2y+1)/H.
  for (int y = 0; y < height; ++y) {
    const double v = 1.0 - static_cast<double>(2 * y + 1) / height;
    for (int x = 0; x < width; ++x) {
      const double u = static_cast<double>(2 * x + 1) / width - 1.0;
      map.u[static_cast<size_t>(y) * width + x] = u;
      map.v[static_cast<size_t>(y) * width + x] = v;
    }
  }
  return map;
}

OrientationMap satellite_orientation_map(int width, int height) {
  if (width < 1 || height < 1)
    throw std::invalid_argument("satellite_orientation_map: dims must be >= 1");
  OrientationMap map;
  map.view = View::kSatellite;
  map.height = height;
  map.width = width;
  map.u.resize(static_cast<size_t>(height) * width);
  map.v.resize(static_cast<size_t>(height) * width);
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  const double r_corner = std::sqrt(cx * cx + cy * cy);
  for (int y = 0; y < height; ++y) {
    const double dy = cy - y;  // north up
    for (int x = 0; x < width; ++x) {
      const double dx = x - cx;
      const double r = std::sqrt(dx * dx + dy * dy);
      double u;
      if (r == 0.0) {
        u = 0.0;  // azimuth singularity at the exact center
      } else {
        double theta = std::atan2(dx, dy);  // north = 0, clockwise positive
        if (theta == M_PI) theta = -M_PI;   // keep u in [-1, 1)
        u = theta / M_PI;
      }
      map.u[static_cast<size_t>(y) * width + x] = u;
      map.v[static_cast<size_t>(y) * width + x] = r_corner > 0.0 ? r / r_corner : 0.0;
    }
  }
  return map;
}

OrientationMap downsample_uv(const OrientationMap& map, int factor) {
  if (factor <= 0) throw std::invalid_argument("downsample_uv: factor must be positive");
  if (factor == 1) return map;
  OrientationMap out;
  out.view = map.view;
  out.height = (map.height + factor - 1) / factor;
  out.width = (map.width + factor - 1) / factor;
  out.u.resize(static_cast<size_t>(out.height) * out.width);
  out.v.resize(static_cast<size_t>(out.height) * out.width);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const size_t src = static_cast<size_t>(y) * factor * map.width + static_cast<size_t>(x) * factor;
      out.u[static_cast<size_t>(y) * out.width + x] = map.u[src];
      out.v[static_cast<size_t>(y) * out.width + x] = map.v[src];
    }
  }
  return out;
}

ImageBuffer circular_shift_panorama(const ImageBuffer& image, long shift) {
  const int w = image.width;
  if (w == 0) return image;
  long s = shift % w;
  if (s < 0) s += w;
  if (s == 0) return image;
  ImageBuffer out(image.height, w);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < w; ++x) {
      const int src_x = static_cast<int>((x - s + w) % w);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y, src_x, c);
    }
  }
  return out;
}

long degrees_to_columns(double angle_deg, int width) {
  if (width < 1) throw std::invalid_argument("degrees_to_columns: width must be >= 1");
  return std::lround(angle_deg / 360.0 * width);
}

void write_uv_planes(const OrientationMap& map, Tensor& dst, int n, int c0) {
  const int h = map.height, w = map.width;
  if (dst.ndim() != 4 || dst.dim(2) != h || dst.dim(3) != w || c0 + 2 > dst.dim(1))
    throw std::invalid_argument("write_uv_planes: tensor/map shape mismatch");
  double* u_plane = dst.data() + dst.offset4(n, c0, 0, 0);
  double* v_plane = dst.data() + dst.offset4(n, c0 + 1, 0, 0);
  const size_t count = static_cast<size_t>(h) * w;
  for (size_t i = 0; i < count; ++i) {
    u_plane[i] = map.u[i];
    v_plane[i] = map.v[i];
  }
}

namespace {

uint8_t to_byte(double x) {
  const double b = std::lround((x + 1.0) / 2.0 * 255.0);
  return static_cast<uint8_t>(std::min(255.0, std::max(0.0, b)));
}

// Minimal HSV (s, v in [0,1], h in [0,1) turns) to RGB for figure export.
void hsv_to_rgb(double h, double s, double& r, double& g, double& b) {
  const double hh = h * 6.0;
  const int sector = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = 1.0 - s;
  const double q = 1.0 - s * f;
  const double t = 1.0 - s * (1.0 - f);
  switch (sector) {
    case 0: r = 1; g = t; b = p; break;
    case 1: r = q; g = 1; b = p; break;
    case 2: r = p; g = 1; b = t; break;
    case 3: r = p; g = q; b = 1; break;
    case 4: r = t; g = p; b = 1; break;
    default: r = 1; g = p; b = q; break;
  }
}

}  // namespace

RasterU8 uv_to_raster(const OrientationMap& map) {
  RasterU8 out;
  out.height = map.height;
  out.width = map.width;
  out.channels = 2;
  out.pixels.resize(static_cast<size_t>(map.height) * map.width * 2);
  const size_t count = static_cast<size_t>(map.height) * map.width;
  for (size_t i = 0; i < count; ++i) {
    out.pixels[i * 2] = to_byte(map.u[i]);
    out.pixels[i * 2 + 1] = to_byte(map.v[i]);
  }
  return out;
}

RasterU8 uv_to_color_raster(const OrientationMap& map) {
  RasterU8 out;
  out.height = map.height;
  out.width = map.width;
  out.channels = 3;
  out.pixels.resize(static_cast<size_t>(map.height) * map.width * 3);
  const size_t count = static_cast<size_t>(map.height) * map.width;
  for (size_t i = 0; i < count; ++i) {
    const double hue = (map.u[i] + 1.0) / 2.0;
    const double sat = map.view == View::kSatellite ? map.v[i] : (map.v[i] + 1.0) / 2.0;
    double r, g, b;
    hsv_to_rgb(hue, std::min(1.0, std::max(0.0, sat)), r, g, b);
    out.pixels[i * 3] = static_cast<uint8_t>(std::lround(r * 255.0));
    out.pixels[i * 3 + 1] = static_cast<uint8_t>(std::lround(g * 255.0));
    out.pixels[i * 3 + 2] = static_cast<uint8_t>(std::lround(b * 255.0));
  }
  return out;
}

}  // namespace crossview
