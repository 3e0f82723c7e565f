#pragma once

// Test-side PNG reader for the 8-bit RGB, filter-0 images the renderer emits.

#include <zlib.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

struct DecodedPng {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  const std::uint8_t* at(int x, int y) const { return &rgb[static_cast<std::size_t>((y * width + x) * 3)]; }
};

inline DecodedPng decode_png(const std::vector<std::uint8_t>& bytes) {
  const auto be32 = [&](std::size_t at) {
    return (std::uint32_t{bytes.at(at)} << 24) | (std::uint32_t{bytes.at(at + 1)} << 16) |
           (std::uint32_t{bytes.at(at + 2)} << 8) | std::uint32_t{bytes.at(at + 3)};
  };
  if (bytes.size() < 8 || bytes[0] != 0x89 || bytes[1] != 'P') throw std::runtime_error("not a png");
  DecodedPng png;
  std::vector<std::uint8_t> idat;
  for (std::size_t pos = 8; pos + 12 <= bytes.size();) {
    const std::uint32_t len = be32(pos);
    const std::string type(bytes.begin() + static_cast<long>(pos) + 4, bytes.begin() + static_cast<long>(pos) + 8);
    const std::size_t data = pos + 8;
    const auto crc = crc32(0, bytes.data() + pos + 4, len + 4);
    if (crc != be32(data + len)) throw std::runtime_error("bad crc in " + type);
    if (type == "IHDR") {
      png.width = static_cast<int>(be32(data));
      png.height = static_cast<int>(be32(data + 4));
      if (bytes[data + 8] != 8 || bytes[data + 9] != 2) throw std::runtime_error("unsupported format");
    } else if (type == "IDAT") {
      idat.insert(idat.end(), bytes.begin() + static_cast<long>(data), bytes.begin() + static_cast<long>(data + len));
    }
    pos = data + len + 4;
  }
  const std::size_t stride = 1 + 3 * static_cast<std::size_t>(png.width);
  std::vector<std::uint8_t> raw(stride * static_cast<std::size_t>(png.height));
  uLongf raw_size = raw.size();
  if (uncompress(raw.data(), &raw_size, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_size != raw.size())
    throw std::runtime_error("bad idat");
  for (int y = 0; y < png.height; ++y) {
    if (raw[static_cast<std::size_t>(y) * stride] != 0) throw std::runtime_error("unexpected filter");
    const auto row = raw.begin() + static_cast<long>(y * stride + 1);
    png.rgb.insert(png.rgb.end(), row, row + static_cast<long>(stride - 1));
  }
  return png;
}
