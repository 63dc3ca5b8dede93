#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "paris/sensors/camera.hpp"

namespace paris::sensors {

using Bytes = std::vector<std::uint8_t>;

/// Decoded PNG: 8-bit RGB or 16-bit grey, samples in row-major order.
struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;
};

Bytes encode_png_rgb(const ColorImage& img);
Bytes encode_png_gray16(const Image<std::uint16_t>& img);
PngImage decode_png(const Bytes& data);

/// Depth in millimetres, 0 for invalid pixels, saturating at 65535.
Image<std::uint16_t> depth_to_mm(const DepthImage& depth);
/// Temperature in centikelvin, saturating at 65535.
Image<std::uint16_t> thermal_to_ck(const ThermalImage& thermal);
/// Greyscale false-colour rendering of a thermal image between its min and max.
ColorImage thermal_to_rgb(const ThermalImage& thermal);

void write_thermal_csv(std::ostream& os, const ThermalImage& thermal);

struct PlyVertex {
  Vec3 position;
  Rgb color{0, 0, 0};
  double temperature = 0.0;
};

/// ASCII PLY with x y z, red green blue and a temperature property.
void write_ply(std::ostream& os, const std::vector<PlyVertex>& vertices);

void write_file(const std::string& path, const Bytes& data);
void write_file(const std::string& path, const std::string& data);
Bytes read_file(const std::string& path);

}  // namespace paris::sensors
