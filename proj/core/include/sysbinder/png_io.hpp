#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sysbinder::png {

struct Rgb8Image {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> pixels;  // row-major, interleaved RGB

  uint8_t& at(int y, int x, int c) { return pixels[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  uint8_t at(int y, int x, int c) const { return pixels[(static_cast<size_t>(y) * width + x) * 3 + c]; }
};

struct IndexedImage {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> indices;                       // row-major palette indices
  std::vector<std::array<uint8_t, 3>> palette;        // index -> RGB

  uint8_t& at(int y, int x) { return indices[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int y, int x) const { return indices[static_cast<size_t>(y) * width + x]; }
};

void write_rgb8(const std::string& path, const Rgb8Image& img);
Rgb8Image read_rgb8(const std::string& path);

// 8-bit palette PNG; indices are preserved exactly on round trip.
void write_indexed8(const std::string& path, const IndexedImage& img);
IndexedImage read_indexed8(const std::string& path);

}  // namespace sysbinder::png
