#pragma once

#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdlnet/tensor.hpp"

namespace sdlnet {

// 8-bit interleaved image, 1 or 3 channels, row-major from the top-left.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> px;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c), px((std::size_t)w * h * c, 0) {}

  std::uint8_t& at(int x, int y, int c) { return px[((std::size_t)y * width + x) * channels + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return px[((std::size_t)y * width + x) * channels + c];
  }

  bool operator==(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels && px == o.px;
  }

  // [3,H,W] float in [0,1]; grayscale replicates its channel
  Tensor<float> to_tensor() const {
    Tensor<float> t({3, (std::size_t)height, (std::size_t)width});
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        for (int c = 0; c < 3; ++c)
          t(std::size_t(c), std::size_t(y), std::size_t(x)) =
              at(x, y, channels == 3 ? c : 0) / 255.0f;
    return t;
  }
};

namespace png_detail {

inline void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back((v >> 24) & 0xFF);
  out.push_back((v >> 16) & 0xFF);
  out.push_back((v >> 8) & 0xFF);
  out.push_back(v & 0xFF);
}

inline std::uint32_t get_u32be(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
         std::uint32_t(p[3]);
}

inline void write_chunk(std::vector<std::uint8_t>& out, const char type[4],
                        const std::vector<std::uint8_t>& data) {
  put_u32be(out, (std::uint32_t)data.size());
  std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  std::uint32_t crc = crc32(0, out.data() + start, (uInt)(out.size() - start));
  put_u32be(out, crc);
}

inline int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace png_detail

inline std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("encode_png: only 1- or 3-channel images");
  using namespace png_detail;
  const int bpp = img.channels;
  std::vector<std::uint8_t> raw;
  raw.reserve((std::size_t)(img.width * bpp + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter: none
    const std::uint8_t* row = img.px.data() + (std::size_t)y * img.width * bpp;
    raw.insert(raw.end(), row, row + (std::size_t)img.width * bpp);
  }
  uLongf bound = compressBound((uLong)raw.size());
  std::vector<std::uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), (uLong)raw.size(), 6) != Z_OK)
    throw std::runtime_error("encode_png: deflate failed");
  compressed.resize(bound);

  std::vector<std::uint8_t> out = {137, 80, 78, 71, 13, 10, 26, 10};
  std::vector<std::uint8_t> ihdr;
  put_u32be(ihdr, (std::uint32_t)img.width);
  put_u32be(ihdr, (std::uint32_t)img.height);
  ihdr.push_back(8);                                  // bit depth
  ihdr.push_back(img.channels == 3 ? 2 : 0);          // color type
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  write_chunk(out, "IHDR", ihdr);
  write_chunk(out, "IDAT", compressed);
  write_chunk(out, "IEND", {});
  return out;
}

inline Image decode_png(const std::vector<std::uint8_t>& bytes, const std::string& what = "png") {
  using namespace png_detail;
  static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
    throw std::runtime_error(what + ": not a PNG file");
  std::size_t pos = 8;
  int w = 0, h = 0, color = -1;
  std::vector<std::uint8_t> idat;
  bool done = false;
  while (!done) {
    if (pos + 8 > bytes.size()) throw std::runtime_error(what + ": truncated PNG");
    std::uint32_t len = get_u32be(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) throw std::runtime_error(what + ": truncated PNG chunk");
    std::string type(bytes.begin() + pos + 4, bytes.begin() + pos + 8);
    const std::uint8_t* data = bytes.data() + pos + 8;
    if (type == "IHDR") {
      w = (int)get_u32be(data);
      h = (int)get_u32be(data + 4);
      int depth = data[8];
      color = data[9];
      if (depth != 8) throw std::runtime_error(what + ": unsupported PNG bit depth");
      if (color != 0 && color != 2 && color != 6)
        throw std::runtime_error(what + ": unsupported PNG color type " + std::to_string(color));
      if (data[12] != 0) throw std::runtime_error(what + ": interlaced PNG not supported");
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (type == "IEND") {
      done = true;
    }
    pos += 12 + len;
  }
  if (w <= 0 || h <= 0 || idat.empty()) throw std::runtime_error(what + ": malformed PNG");

  const int src_c = color == 2 ? 3 : (color == 6 ? 4 : 1);
  const std::size_t stride = (std::size_t)w * src_c;
  std::vector<std::uint8_t> raw((stride + 1) * h);
  uLongf raw_len = (uLongf)raw.size();
  if (uncompress(raw.data(), &raw_len, idat.data(), (uLong)idat.size()) != Z_OK ||
      raw_len != raw.size())
    throw std::runtime_error(what + ": PNG inflate failed");

  // unfilter in place into a packed buffer
  std::vector<std::uint8_t> packed(stride * h);
  std::vector<std::uint8_t> prev(stride, 0);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t filter = raw[(stride + 1) * y];
    const std::uint8_t* src = raw.data() + (stride + 1) * y + 1;
    std::uint8_t* dst = packed.data() + stride * y;
    for (std::size_t i = 0; i < stride; ++i) {
      int a = i >= (std::size_t)src_c ? dst[i - src_c] : 0;
      int b = prev[i];
      int c = i >= (std::size_t)src_c ? prev[i - src_c] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw std::runtime_error(what + ": bad PNG filter type");
      }
      dst[i] = (std::uint8_t)v;
    }
    std::memcpy(prev.data(), dst, stride);
  }

  Image img(w, h, src_c == 1 ? 1 : 3);
  if (src_c == 3 || src_c == 1) {
    img.px = std::move(packed);
  } else {  // drop alpha
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c)
          img.at(x, y, c) = packed[((std::size_t)y * w + x) * 4 + c];
  }
  return img;
}

inline void save_png(const std::string& path, const Image& img) {
  auto bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_png: cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), (std::streamsize)bytes.size());
  if (!f) throw std::runtime_error("save_png: write failed for " + path);
}

inline Image load_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_png: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return decode_png(bytes, path);
}

// Bilinear sample with zero fill outside the source rectangle. Coordinates
// within 1e-9 of the frame are snapped onto it so exact integer maps stay
// exact under floating-point noise.
inline void sample_bilinear(const Image& img, double sx, double sy, double* out) {
  if (sx < 0 && sx > -1e-9) sx = 0;
  if (sy < 0 && sy > -1e-9) sy = 0;
  if (sx > img.width - 1 && sx < img.width - 1 + 1e-9) sx = img.width - 1;
  if (sy > img.height - 1 && sy < img.height - 1 + 1e-9) sy = img.height - 1;
  if (sx < 0 || sy < 0 || sx > img.width - 1 || sy > img.height - 1) {
    for (int c = 0; c < img.channels; ++c) out[c] = 0;
    return;
  }
  int x0 = (int)sx, y0 = (int)sy;
  int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  double fx = sx - x0, fy = sy - y0;
  for (int c = 0; c < img.channels; ++c) {
    double v00 = img.at(x0, y0, c), v10 = img.at(x1, y0, c);
    double v01 = img.at(x0, y1, c), v11 = img.at(x1, y1, c);
    out[c] = (v00 * (1 - fx) + v10 * fx) * (1 - fy) + (v01 * (1 - fx) + v11 * fx) * fy;
  }
}

// align_corners=true maps corner pixel centers onto corner pixel centers
// (the convention rectification uses); false is the usual area mapping.
inline Image resize_bilinear(const Image& img, int out_w, int out_h, bool align_corners = false) {
  Image out(out_w, out_h, img.channels);
  double vals[4];
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      double sx, sy;
      if (align_corners) {
        sx = out_w > 1 ? (double)x * (img.width - 1) / (out_w - 1) : 0.0;
        sy = out_h > 1 ? (double)y * (img.height - 1) / (out_h - 1) : 0.0;
      } else {
        sx = (x + 0.5) * img.width / out_w - 0.5;
        sy = (y + 0.5) * img.height / out_h - 0.5;
        sx = std::min(std::max(sx, 0.0), (double)img.width - 1);
        sy = std::min(std::max(sy, 0.0), (double)img.height - 1);
      }
      sample_bilinear(img, sx, sy, vals);
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = (std::uint8_t)std::min(255.0, std::max(0.0, vals[c] + 0.5));
    }
  return out;
}

inline double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw std::invalid_argument("psnr: image shapes differ");
  double mse = 0;
  for (std::size_t i = 0; i < a.px.size(); ++i) {
    double d = (double)a.px[i] - b.px[i];
    mse += d * d;
  }
  mse /= (double)a.px.size();
  if (mse == 0) return 99.0;
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace sdlnet
