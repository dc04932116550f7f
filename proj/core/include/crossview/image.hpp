#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace crossview {

// H x W x 3 interleaved RGB, values in [-1, 1] (byte b maps to 2*b/255 - 1).
struct ImageBuffer {
  int height = 0;
  int width = 0;
  std::vector<double> rgb;

  ImageBuffer() = default;
  ImageBuffer(int h, int w) : height(h), width(w), rgb(static_cast<size_t>(h) * w * 3, 0.0) {}

  double& at(int y, int x, int c) { return rgb[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const { return rgb[(static_cast<size_t>(y) * width + x) * 3 + c]; }
};

// 8-bit interleaved raster, 1..4 channels, as decoded or about to be encoded.
struct RasterU8 {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<uint8_t> pixels;

  uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

// Decodes PNG or JPEG (sniffed from magic bytes) into 8-bit RGB.
RasterU8 decode_image(const std::string& path);

// Decode + bilinear resize to target + map bytes to [-1, 1]. Images already at
// the target size pass through byte-faithfully with no resampling.
ImageBuffer load_image(const std::string& path, int target_h, int target_w);

// PNG encoders. 1 = gray, 2 = gray+alpha, 3 = RGB channels.
void save_png(const std::string& path, const RasterU8& raster);

ImageBuffer raster_to_image(const RasterU8& raster);

}  // namespace crossview
