#include "aos/raster_io.hpp"

#include "aos/error.hpp"
#include "aos/kvtext.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace aos {

namespace {

std::uint16_t quantize16(float v) {
  if (std::isnan(v)) return 0;
  return static_cast<std::uint16_t>(std::lround(std::clamp(static_cast<double>(v), 0.0, 1.0) * 65535.0));
}

int read_header_int(std::istream& in) {
  for (;;) {
    in >> std::ws;
    if (in.peek() != '#') break;
    std::string skip;
    std::getline(in, skip);
  }
  int v = -1;
  if (!(in >> v)) throw ParseError(0, "bad PGM header");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

}  // namespace

void write_pgm16(std::ostream& out, const Image<float>& img) {
  out << "P5\n" << img.cols() << " " << img.rows() << "\n65535\n";
  std::vector<unsigned char> buf(static_cast<std::size_t>(img.size()) * 2);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const std::uint16_t q = quantize16(img.data()[i]);
    buf[2 * i] = static_cast<unsigned char>(q >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(q & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

Image<std::uint16_t> read_pgm16(std::istream& in) {
  std::string magic;
  in >> magic;
  if (magic != "P5") throw ParseError(1, "not a binary PGM");
  const int w = read_header_int(in);
  const int h = read_header_int(in);
  const int maxval = read_header_int(in);
  if (w <= 0 || h <= 0 || maxval != 65535) throw ParseError(1, "expected a 16-bit PGM");
  in.get();
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 2);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw ParseError(0, "truncated PGM data");
  Image<std::uint16_t> img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    img.data()[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
  }
  return img;
}

void write_pgm8(std::ostream& out, const Image<float>& img, double lo, double hi) {
  out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<unsigned char> buf(static_cast<std::size_t>(img.size()));
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const float v = img.data()[i];
    buf[i] = std::isnan(v) ? 0 : static_cast<unsigned char>(std::lround(std::clamp((v - lo) / span, 0.0, 1.0) * 255.0));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void write_integral_sidecar(std::ostream& out, const IntegralImage& img) {
  using kv::format_double;
  using kv::format_doubles;
  kv::Document doc;
  auto& head = doc.add_section("integral");
  head.add("resolution", std::to_string(img.resolution()));
  head.add("fov_deg", format_double(img.intrinsics.fov_deg));
  head.add("frames", std::to_string(img.frame_count));
  head.add("encoding", "round(value * 65535), invalid = 0");
  const auto& p = img.virtual_pose;
  auto& pose = doc.add_section("virtual_pose");
  pose.add("position", format_doubles({p.position.x(), p.position.y(), p.position.z()}));
  pose.add("yaw_deg", format_double(p.yaw_deg));
  pose.add("pitch_deg", format_double(p.pitch_deg));
  pose.add("roll_deg", format_double(p.roll_deg));

  auto& counts = doc.add_section("counts");
  const int valid = img.valid_count();
  counts.add("valid_pixels", std::to_string(valid));
  counts.add("invalid_pixels", std::to_string(img.counts.size() - valid));
  counts.add("min", std::to_string(img.counts.minCoeff()));
  counts.add("max", std::to_string(img.counts.maxCoeff()));
  counts.add("mean", format_double(img.counts.cast<double>().mean()));

  auto& fp = doc.add_section("footprint");
  const char* names[] = {"nw", "ne", "se", "sw"};
  const auto corners = img.footprint();
  for (int i = 0; i < 4; ++i) {
    fp.add(names[i], std::isnan(corners[i].x()) ? std::string("miss")
                                                 : format_doubles({corners[i].x(), corners[i].y(), corners[i].z()}));
  }
  doc.write(out);
}

void write_pgm16_file(const std::string& path, const Image<float>& img) {
  auto out = open_out(path);
  write_pgm16(out, img);
}

void write_integral_files(const std::string& pgm_path, const std::string& sidecar_path, const IntegralImage& img) {
  write_pgm16_file(pgm_path, img.pixels);
  auto side = open_out(sidecar_path);
  write_integral_sidecar(side, img);
}

}  // namespace aos
