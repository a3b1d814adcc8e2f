#pragma once

// Binary PGM rasters. 16-bit files store round(value * 65535) big-endian;
// invalid pixels are written as 0 and listed in the sidecar.

#include "aos/aoscore.hpp"
#include "aos/terrain.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace aos {

/// NaN pixels become 0; finite values are clamped to [0, 1].
void write_pgm16(std::ostream& out, const Image<float>& img);
Image<std::uint16_t> read_pgm16(std::istream& in);

/// 8-bit preview stretched linearly from [lo, hi]; NaN pixels become 0.
void write_pgm8(std::ostream& out, const Image<float>& img, double lo = 0.0, double hi = 1.0);

/// Virtual pose, frame count, count statistics and the footprint corners.
void write_integral_sidecar(std::ostream& out, const IntegralImage& img);

void write_pgm16_file(const std::string& path, const Image<float>& img);
void write_integral_files(const std::string& pgm_path, const std::string& sidecar_path, const IntegralImage& img);

}  // namespace aos
