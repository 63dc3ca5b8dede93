#include "paris/sensors/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "paris/common/error.hpp"

namespace paris::sensors {
namespace {

void on_write(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void on_flush(png_structp) {}

void on_warning(png_structp, png_const_charp) {}

Bytes encode(int width, int height, int color_type, int bit_depth, const std::vector<png_bytep>& rows) {
  Bytes out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, on_warning);
  if (!png) throw RuntimeError("png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw RuntimeError("png: encoding failed");
  }
  {
    png_set_write_fn(png, &out, on_write, on_flush);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 3);
    png_write_info(png, info);
    png_write_image(png, const_cast<png_bytepp>(rows.data()));
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

struct ReadCursor {
  const Bytes* data;
  std::size_t pos;
};

void on_read(png_structp png, png_bytep out, png_size_t n) {
  auto* c = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (c->pos + n > c->data->size()) png_error(png, "truncated data");
  std::memcpy(out, c->data->data() + c->pos, n);
  c->pos += n;
}

}  // namespace

Bytes encode_png_rgb(const ColorImage& img) {
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(img.width) * img.height * 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    for (int c = 0; c < 3; ++c) buf[3 * i + static_cast<std::size_t>(c)] = img.data[i][static_cast<std::size_t>(c)];
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int v = 0; v < img.height; ++v) rows[static_cast<std::size_t>(v)] = buf.data() + static_cast<std::size_t>(v) * img.width * 3;
  return encode(img.width, img.height, PNG_COLOR_TYPE_RGB, 8, rows);
}

Bytes encode_png_gray16(const Image<std::uint16_t>& img) {
  // PNG stores 16-bit samples big-endian.
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(img.width) * img.height * 2);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    buf[2 * i] = static_cast<std::uint8_t>(img.data[i] >> 8);
    buf[2 * i + 1] = static_cast<std::uint8_t>(img.data[i] & 0xff);
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int v = 0; v < img.height; ++v) rows[static_cast<std::size_t>(v)] = buf.data() + static_cast<std::size_t>(v) * img.width * 2;
  return encode(img.width, img.height, PNG_COLOR_TYPE_GRAY, 16, rows);
}

PngImage decode_png(const Bytes& data) {
  if (data.size() < 8 || png_sig_cmp(data.data(), 0, 8) != 0) throw ParseError("not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, on_warning);
  png_infop info = png_create_info_struct(png);
  PngImage out;
  ReadCursor cursor{&data, 0};
  std::vector<std::uint8_t> buf;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("malformed PNG stream");
  }
  {
    png_set_read_fn(png, &cursor, on_read);
    png_read_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.bit_depth = png_get_bit_depth(png, info);
    out.channels = png_get_channels(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    buf.assign(rowbytes * static_cast<std::size_t>(out.height), 0);
    rows.assign(static_cast<std::size_t>(out.height), nullptr);
    for (int v = 0; v < out.height; ++v) rows[static_cast<std::size_t>(v)] = buf.data() + rowbytes * static_cast<std::size_t>(v);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    const std::size_t n = static_cast<std::size_t>(out.width) * out.height * static_cast<std::size_t>(out.channels);
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      out.samples[i] = out.bit_depth == 16 ? static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]) : buf[i];
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

Image<std::uint16_t> depth_to_mm(const DepthImage& depth) {
  Image<std::uint16_t> out(depth.width, depth.height, 0);
  for (std::size_t i = 0; i < depth.data.size(); ++i) {
    const double d = depth.data[i];
    if (d > 0.0 && std::isfinite(d)) out.data[i] = static_cast<std::uint16_t>(std::min(65535.0, std::round(d * 1000.0)));
  }
  return out;
}

Image<std::uint16_t> thermal_to_ck(const ThermalImage& thermal) {
  Image<std::uint16_t> out(thermal.width, thermal.height, 0);
  for (std::size_t i = 0; i < thermal.data.size(); ++i)
    out.data[i] = static_cast<std::uint16_t>(std::clamp(std::round(thermal.data[i] * 100.0), 0.0, 65535.0));
  return out;
}

ColorImage thermal_to_rgb(const ThermalImage& thermal) {
  ColorImage out(thermal.width, thermal.height);
  if (thermal.data.empty()) return out;
  const auto [lo, hi] = std::minmax_element(thermal.data.begin(), thermal.data.end());
  const double span = *hi - *lo;
  for (std::size_t i = 0; i < thermal.data.size(); ++i) {
    const double f = span > 0.0 ? (thermal.data[i] - *lo) / span : 0.5;
    const auto g = static_cast<std::uint8_t>(std::lround(255.0 * f));
    out.data[i] = {g, g, g};
  }
  return out;
}

void write_thermal_csv(std::ostream& os, const ThermalImage& thermal) {
  char buf[32];
  for (int v = 0; v < thermal.height; ++v) {
    for (int u = 0; u < thermal.width; ++u) {
      std::snprintf(buf, sizeof buf, "%.4f", thermal.at(u, v));
      if (u) os << ',';
      os << buf;
    }
    os << '\n';
  }
}

void write_ply(std::ostream& os, const std::vector<PlyVertex>& vertices) {
  os << "ply\nformat ascii 1.0\nelement vertex " << vertices.size()
     << "\nproperty float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "property float temperature\nend_header\n";
  char buf[160];
  for (const auto& v : vertices) {
    std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f %u %u %u %.4f\n", v.position.x(), v.position.y(), v.position.z(),
                  static_cast<unsigned>(v.color[0]), static_cast<unsigned>(v.color[1]),
                  static_cast<unsigned>(v.color[2]), v.temperature);
    os << buf;
  }
}

void write_file(const std::string& path, const Bytes& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RuntimeError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RuntimeError("cannot write " + path);
  f << data;
}

Bytes read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw RuntimeError("cannot read " + path);
  return Bytes(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace paris::sensors
