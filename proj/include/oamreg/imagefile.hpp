#pragma once

// Grayscale image files: portable graymap (P2/P5, 8 or 16 bit) natively and
// PNG through libpng. Pixels come back as doubles in file scale, row 0 at
// the top of the picture.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "oamreg/error.hpp"
#include "oamreg/optics.hpp"

namespace oamreg {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // row-major, height x width
};

namespace detail {

inline std::string pgm_token(std::istream& in, const std::string& origin) {
  std::string tok;
  for (;;) {
    const int ch = in.get();
    require(ch != EOF, ErrorCategory::format, "truncated PGM header in " + origin);
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
}

inline int pgm_int(std::istream& in, const std::string& origin) {
  const std::string tok = pgm_token(in, origin);
  require(!tok.empty() && std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) &&
              tok.size() < 10,
          ErrorCategory::format, "bad PGM header field '" + tok + "' in " + origin);
  return std::stoi(tok);
}

inline bool has_png_signature(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

struct PngFile {
  std::FILE* fp = nullptr;
  ~PngFile() {
    if (fp) std::fclose(fp);
  }
};

}  // namespace detail

inline GrayImage read_pgm(const std::filesystem::path& path) {
  const std::string origin = path.string();
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::io, "cannot read " + origin);
  const std::string magic = detail::pgm_token(in, origin);
  require(magic == "P2" || magic == "P5", ErrorCategory::format, origin + " is not a PGM file");
  GrayImage img;
  img.width = detail::pgm_int(in, origin);
  img.height = detail::pgm_int(in, origin);
  const int maxval = detail::pgm_int(in, origin);
  require(img.width > 0 && img.height > 0 && maxval > 0 && maxval <= 65535, ErrorCategory::format,
          "bad PGM dimensions or maxval in " + origin);
  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  img.pixels.resize(n);
  if (magic == "P2") {
    for (auto& p : img.pixels) p = detail::pgm_int(in, origin);
  } else {
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(n * static_cast<std::size_t>(bytes));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(in.gcount() == static_cast<std::streamsize>(raw.size()), ErrorCategory::format,
            "truncated PGM data in " + origin);
    for (std::size_t i = 0; i < n; ++i) {
      img.pixels[i] = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
    }
  }
  for (double p : img.pixels) {
    require(p <= maxval, ErrorCategory::format, "PGM sample above maxval in " + origin);
  }
  return img;
}

inline GrayImage read_png(const std::filesystem::path& path) {
  const std::string origin = path.string();
  detail::PngFile file;
  file.fp = std::fopen(origin.c_str(), "rb");
  require(file.fp != nullptr, ErrorCategory::io, "cannot read " + origin);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  require(png && info, ErrorCategory::io, "libpng initialisation failed");
  GrayImage img;
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  int depth = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCategory::format, "corrupt PNG file " + origin);
  }
  png_init_io(png, file.fp);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  if (png_get_bit_depth(png, info) == 16) png_set_swap(png);
  png_read_update_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * static_cast<std::size_t>(img.height));
  rows.resize(static_cast<std::size_t>(img.height));
  for (int r = 0; r < img.height; ++r) rows[static_cast<std::size_t>(r)] = buffer.data() + stride * r;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  for (int r = 0; r < img.height; ++r) {
    const unsigned char* row = rows[static_cast<std::size_t>(r)];
    for (int c = 0; c < img.width; ++c) {
      double v;
      if (depth == 16) {
        std::uint16_t s;
        std::memcpy(&s, row + 2 * c, 2);
        v = s;
      } else {
        v = row[c];
      }
      img.pixels[static_cast<std::size_t>(r) * img.width + c] = v;
    }
  }
  return img;
}

// Dispatches on content: PNG signature, otherwise PGM.
inline GrayImage read_gray_image(const std::filesystem::path& path) {
  require(std::filesystem::is_regular_file(path), ErrorCategory::io,
          "cannot read image " + path.string());
  return detail::has_png_signature(path) ? read_png(path) : read_pgm(path);
}

namespace detail {

// Maps pixels onto 0..maxval relative to the image maximum.
inline std::vector<std::uint16_t> quantize(const std::vector<double>& px, int maxval) {
  const double top = px.empty() ? 0.0 : *std::max_element(px.begin(), px.end());
  std::vector<std::uint16_t> out(px.size(), 0);
  if (top <= 0) return out;
  for (std::size_t i = 0; i < px.size(); ++i) {
    out[i] = static_cast<std::uint16_t>(std::lround(std::clamp(px[i] / top, 0.0, 1.0) * maxval));
  }
  return out;
}

}  // namespace detail

// Binary 16-bit PGM of a raster scaled to its maximum.
inline void write_pgm(const std::filesystem::path& path, int width, int height,
                      const std::vector<double>& pixels) {
  require(pixels.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
          ErrorCategory::dimension_mismatch, "pixel count does not match image size");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCategory::io, "cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << "\n65535\n";
  for (std::uint16_t s : detail::quantize(pixels, 65535)) {
    const char be[2] = {static_cast<char>(s >> 8), static_cast<char>(s & 0xff)};
    out.write(be, 2);
  }
  require(static_cast<bool>(out), ErrorCategory::io, "failed writing " + path.string());
}

// 16-bit grayscale PNG of a raster scaled to its maximum.
inline void write_png(const std::filesystem::path& path, int width, int height,
                      const std::vector<double>& pixels) {
  require(pixels.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
          ErrorCategory::dimension_mismatch, "pixel count does not match image size");
  const std::vector<std::uint16_t> q = detail::quantize(pixels, 65535);
  std::vector<unsigned char> bytes(q.size() * 2);
  for (std::size_t i = 0; i < q.size(); ++i) {
    bytes[2 * i] = static_cast<unsigned char>(q[i] >> 8);
    bytes[2 * i + 1] = static_cast<unsigned char>(q[i] & 0xff);
  }
  detail::PngFile file;
  file.fp = std::fopen(path.string().c_str(), "wb");
  require(file.fp != nullptr, ErrorCategory::io, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  require(png && info, ErrorCategory::io, "libpng initialisation failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCategory::io, "failed writing " + path.string());
  }
  png_init_io(png, file.fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r) png_write_row(png, bytes.data() + 2 * static_cast<std::size_t>(r) * width);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline void write_image(const std::filesystem::path& path, const IntensityImage& img) {
  if (path.extension() == ".png") {
    write_png(path, img.cols, img.rows, img.pixels);
  } else {
    write_pgm(path, img.cols, img.rows, img.pixels);
  }
}

}  // namespace oamreg
