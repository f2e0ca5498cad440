#pragma once

// Minimal PNG output (8-bit RGB, zlib-compressed) plus a small scatter-plot
// rasterizer for the projection figures. No text rendering — panels and
// classes are distinguished by position and color.

#include <zlib.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "temotts/core/common.hpp"

namespace temotts::viz {

struct Image {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Image(std::size_t w, std::size_t h, std::array<std::uint8_t, 3> fill = {255, 255, 255})
      : width(w), height(h), rgb(w * h * 3) {
    for (std::size_t i = 0; i < w * h; ++i) {
      rgb[i * 3] = fill[0];
      rgb[i * 3 + 1] = fill[1];
      rgb[i * 3 + 2] = fill[2];
    }
  }

  void set(std::size_t x, std::size_t y, std::array<std::uint8_t, 3> c) {
    if (x >= width || y >= height) return;
    const std::size_t i = (y * width + x) * 3;
    rgb[i] = c[0];
    rgb[i + 1] = c[1];
    rgb[i + 2] = c[2];
  }

  void fill_rect(std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1,
                 std::array<std::uint8_t, 3> c) {
    for (std::size_t y = y0; y < y1 && y < height; ++y)
      for (std::size_t x = x0; x < x1 && x < width; ++x) set(x, y, c);
  }
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
                      const std::vector<std::uint8_t>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = ::crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

inline void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.width == 0 || img.height == 0) throw Error("write_png: empty image");

  // Raw image stream: each scanline prefixed with filter byte 0.
  std::vector<std::uint8_t> raw;
  raw.reserve(img.height * (img.width * 3 + 1));
  for (std::size_t y = 0; y < img.height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), img.rgb.begin() + static_cast<long>(y * img.width * 3),
               img.rgb.begin() + static_cast<long>((y + 1) * img.width * 3));
  }

  uLongf comp_len = ::compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> comp(comp_len);
  if (::compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw Error("write_png: deflate failed");
  comp.resize(comp_len);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  std::vector<std::uint8_t> ihdr;
  detail::put_u32(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_u32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  detail::put_chunk(out, "IHDR", ihdr);
  detail::put_chunk(out, "IDAT", comp);
  detail::put_chunk(out, "IEND", {});

  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw Error("write failed: " + path.string());
}

inline std::array<std::uint8_t, 3> class_color(std::size_t cls) {
  static const std::array<std::array<std::uint8_t, 3>, 8> palette = {{{214, 39, 40},
                                                                      {44, 160, 44},
                                                                      {31, 119, 180},
                                                                      {255, 127, 14},
                                                                      {148, 103, 189},
                                                                      {140, 86, 75},
                                                                      {227, 119, 194},
                                                                      {23, 190, 207}}};
  return palette[cls % palette.size()];
}

// One scatter panel into a sub-rectangle of the image; coordinates are
// auto-scaled to the panel with a margin.
inline void draw_scatter(Image& img, const std::vector<std::array<double, 2>>& coords,
                         const std::vector<std::size_t>& class_ids, std::size_t x0, std::size_t y0,
                         std::size_t w, std::size_t h) {
  if (coords.empty()) return;
  if (class_ids.size() != coords.size()) throw Error("draw_scatter: class id count mismatch");

  // Panel frame.
  const std::array<std::uint8_t, 3> frame = {60, 60, 60};
  img.fill_rect(x0, y0, x0 + w, y0 + 1, frame);
  img.fill_rect(x0, y0 + h - 1, x0 + w, y0 + h, frame);
  img.fill_rect(x0, y0, x0 + 1, y0 + h, frame);
  img.fill_rect(x0 + w - 1, y0, x0 + w, y0 + h, frame);

  double min_x = coords[0][0], max_x = coords[0][0];
  double min_y = coords[0][1], max_y = coords[0][1];
  for (const auto& c : coords) {
    min_x = std::min(min_x, c[0]);
    max_x = std::max(max_x, c[0]);
    min_y = std::min(min_y, c[1]);
    max_y = std::max(max_y, c[1]);
  }
  const double span_x = max_x - min_x > 1e-12 ? max_x - min_x : 1.0;
  const double span_y = max_y - min_y > 1e-12 ? max_y - min_y : 1.0;
  const std::size_t margin = 10;

  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double fx = (coords[i][0] - min_x) / span_x;
    const double fy = (coords[i][1] - min_y) / span_y;
    const std::size_t px =
        x0 + margin + static_cast<std::size_t>(fx * static_cast<double>(w - 2 * margin - 1));
    const std::size_t py =
        y0 + margin + static_cast<std::size_t>((1.0 - fy) * static_cast<double>(h - 2 * margin - 1));
    const auto color = class_color(class_ids[i]);
    for (std::size_t dy = 0; dy < 3; ++dy)
      for (std::size_t dx = 0; dx < 3; ++dx) img.set(px + dx - 1, py + dy - 1, color);
  }
}

}  // namespace temotts::viz
