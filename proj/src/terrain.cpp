#include "aos/terrain.hpp"

#include "aos/error.hpp"
#include "aos/rng.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string_view>
#include <vector>

namespace aos {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && !(line[j] == ' ' || line[j] == '\t' || line[j] == '\r')) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  }
  return true;
}

double parse_double(std::string_view tok, std::size_t line) {
  double value = 0.0;
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(line, "not a number: '" + std::string(tok) + "'");
  }
  return value;
}

long parse_int(std::string_view tok, std::size_t line) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(line, "not an integer: '" + std::string(tok) + "'");
  }
  return value;
}

Eigen::Matrix3d rot_x(double rad) {
  return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitX()).toRotationMatrix();
}
Eigen::Matrix3d rot_y(double rad) {
  return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitY()).toRotationMatrix();
}
Eigen::Matrix3d rot_z(double rad) {
  return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

}  // namespace

double normalize_angle_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r <= -180.0) r += 360.0;
  if (r > 180.0) r -= 360.0;
  return r;
}

// --- ElevationModel ---------------------------------------------------------

ElevationModel::ElevationModel(Eigen::Vector2d origin, double cell_size, Heights heights, double nodata_value)
    : origin_(std::move(origin)), cell_size_(cell_size), heights_(std::move(heights)), nodata_(nodata_value) {
  if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_)) throw ParameterError("cell_size must be > 0");
  if (heights_.cols() < 2 || heights_.rows() < 2) throw ParameterError("elevation model needs at least 2x2 nodes");
  max_height_ = -std::numeric_limits<double>::infinity();
  min_height_ = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < heights_.rows(); ++r) {
    for (Eigen::Index c = 0; c < heights_.cols(); ++c) {
      const double h = heights_(r, c);
      if (h == nodata_) continue;
      if (!std::isfinite(h)) throw ParameterError("non-finite height at node (" + std::to_string(r) + ", " + std::to_string(c) + ")");
      max_height_ = std::max(max_height_, h);
      min_height_ = std::min(min_height_, h);
    }
  }
  if (!std::isfinite(max_height_)) throw ParameterError("elevation model has no valid nodes");
}

ElevationModel ElevationModel::flat(Eigen::Vector2d origin, Eigen::Vector2d extent, double cell_size, double height) {
  const int cols = std::max(2, static_cast<int>(std::ceil(extent.x() / cell_size - 1e-9)) + 1);
  const int rows = std::max(2, static_cast<int>(std::ceil(extent.y() / cell_size - 1e-9)) + 1);
  return ElevationModel(std::move(origin), cell_size, Heights::Constant(rows, cols, height), -9999.0);
}

Eigen::Vector2d ElevationModel::max_corner() const {
  return origin_ + cell_size_ * Eigen::Vector2d(n_cols() - 1, n_rows() - 1);
}

bool ElevationModel::contains(double x, double y) const {
  const Eigen::Vector2d hi = max_corner();
  return x >= origin_.x() && x <= hi.x() && y >= origin_.y() && y <= hi.y();
}

double ElevationModel::sample(double x, double y) const {
  const double fc = (x - origin_.x()) / cell_size_;
  const double fr = (y - origin_.y()) / cell_size_;
  const int cols = n_cols();
  const int rows = n_rows();
  if (!(fc >= 0.0 && fr >= 0.0 && fc <= cols - 1 && fr <= rows - 1)) return kNaN;
  int c0 = std::min(static_cast<int>(fc), cols - 2);
  int r0 = std::min(static_cast<int>(fr), rows - 2);
  const double tx = fc - c0;
  const double ty = fr - r0;
  const double a = heights_(r0, c0), b = heights_(r0, c0 + 1);
  const double c = heights_(r0 + 1, c0), d = heights_(r0 + 1, c0 + 1);
  const bool wa = tx < 1.0 && ty < 1.0, wb = tx > 0.0 && ty < 1.0;
  const bool wc = tx < 1.0 && ty > 0.0, wd = tx > 0.0 && ty > 0.0;
  if ((wa && a == nodata_) || (wb && b == nodata_) || (wc && c == nodata_) || (wd && d == nodata_)) return kNaN;
  // Zero-weight corners may hold nodata; substitute their partner so the lerp stays exact.
  const double a1 = a == nodata_ ? b : a;
  const double b1 = b == nodata_ ? a1 : b;
  const double c1 = c == nodata_ ? d : c;
  const double d1 = d == nodata_ ? c1 : d;
  const double bottom = std::lerp(a1, b1, tx);
  const double top = std::lerp(c1, d1, tx);
  return std::lerp(bottom, top, ty);
}

double ground_height(const ElevationModel& dem, double x, double y) {
  if (!dem.contains(x, y)) {
    throw DomainError("point (" + std::to_string(x) + ", " + std::to_string(y) + ") outside elevation model footprint");
  }
  const double h = dem.sample(x, y);
  if (std::isnan(h)) {
    throw NoDataError("nodata node next to (" + std::to_string(x) + ", " + std::to_string(y) + ")");
  }
  return h;
}

// --- ASCII grid ---------------------------------------------------------------

ElevationModel load_dem(std::istream& in) {
  static constexpr std::array<std::string_view, 6> kKeys = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize",
                                                            "NODATA_value"};
  std::array<std::optional<double>, 6> header;
  std::string line;
  std::size_t line_no = 0;
  std::size_t header_seen = 0;
  while (header_seen < kKeys.size()) {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, "unexpected end of input in header");
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) throw ParseError(line_no, "header line must be '<key> <value>'");
    std::size_t idx = kKeys.size();
    for (std::size_t k = 0; k < kKeys.size(); ++k) {
      if (iequals(tokens[0], kKeys[k])) idx = k;
    }
    if (idx == kKeys.size()) throw ParseError(line_no, "unknown header key '" + std::string(tokens[0]) + "'");
    if (header[idx]) throw ParseError(line_no, "duplicate header key '" + std::string(tokens[0]) + "'");
    header[idx] = idx < 2 ? static_cast<double>(parse_int(tokens[1], line_no)) : parse_double(tokens[1], line_no);
    ++header_seen;
  }
  const long ncols = static_cast<long>(*header[0]);
  const long nrows = static_cast<long>(*header[1]);
  if (ncols < 2 || nrows < 2) throw ParseError(line_no, "ncols and nrows must be >= 2");
  if (!(*header[4] > 0.0)) throw ParseError(line_no, "cellsize must be > 0");
  const double nodata = *header[5];

  ElevationModel::Heights heights(nrows, ncols);
  long row = 0;
  while (row < nrows) {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, "expected " + std::to_string(nrows) + " rows, got " + std::to_string(row));
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (static_cast<long>(tokens.size()) != ncols) {
      throw ParseError(line_no, "row has " + std::to_string(tokens.size()) + " values, header declares " + std::to_string(ncols));
    }
    for (long c = 0; c < ncols; ++c) {
      const double h = parse_double(tokens[c], line_no);
      if (h != nodata && !std::isfinite(h)) throw ParseError(line_no, "non-finite height");
      heights(nrows - 1 - row, c) = h;  // file rows run north to south
    }
    ++row;
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!split_ws(line).empty()) throw ParseError(line_no, "data after the last declared row");
  }
  try {
    return ElevationModel({*header[2], *header[3]}, *header[4], std::move(heights), nodata);
  } catch (const ParameterError& e) {
    throw ParseError(0, e.what());
  }
}

ElevationModel load_dem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open elevation model '" + path + "'");
  return load_dem(in);
}

void save_dem(std::ostream& out, const ElevationModel& dem) {
  auto fmt = [](double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
  };
  out << "ncols " << dem.n_cols() << "\n"
      << "nrows " << dem.n_rows() << "\n"
      << "xllcorner " << fmt(dem.origin().x()) << "\n"
      << "yllcorner " << fmt(dem.origin().y()) << "\n"
      << "cellsize " << fmt(dem.cell_size()) << "\n"
      << "NODATA_value " << fmt(dem.nodata_value()) << "\n";
  for (int r = dem.n_rows() - 1; r >= 0; --r) {
    for (int c = 0; c < dem.n_cols(); ++c) {
      if (c) out << ' ';
      out << fmt(dem.heights()(r, c));
    }
    out << "\n";
  }
}

// --- Camera -----------------------------------------------------------------------

double CameraIntrinsics::focal_px() const {
  return 0.5 * resolution_px / std::tan(0.5 * fov_deg * kDeg);
}

void CameraIntrinsics::validate() const {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ParameterError("fov_deg must be in (0, 180)");
  if (resolution_px < 1) throw ParameterError("resolution_px must be >= 1");
}

Eigen::Matrix3d Pose::rotation() const {
  Eigen::Matrix3d base;
  base << 1, 0, 0,  //
      0, -1, 0,     //
      0, 0, -1;
  return rot_z(-yaw_deg * kDeg) * base * rot_x(pitch_deg * kDeg) * rot_y(roll_deg * kDeg);
}

std::uint64_t pose_digest(const Pose& pose) {
  std::uint64_t h = 0x243F6A8885A308D3ull;
  for (double v : {pose.position.x(), pose.position.y(), pose.position.z(), pose.yaw_deg, pose.pitch_deg, pose.roll_deg}) {
    h = rng::mix(h, std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

PinholeCamera::PinholeCamera(const Pose& pose, const CameraIntrinsics& intr)
    : center_(pose.position),
      world_from_camera_(pose.rotation()),
      camera_from_world_(world_from_camera_.transpose()),
      focal_(intr.focal_px()),
      half_(0.5 * intr.resolution_px),
      res_(intr.resolution_px) {}

std::optional<Eigen::Vector2d> project_world_to_pixel(const Pose& pose, const CameraIntrinsics& intr,
                                                      const Eigen::Vector3d& p) {
  return PinholeCamera(pose, intr).project(p);
}

// --- Ray casting ------------------------------------------------------------------

std::optional<double> intersect_ground(const ElevationModel& dem, const Eigen::Vector3d& origin,
                                       const Eigen::Vector3d& dir) {
  if (!(dir.z() < -1e-12)) return std::nullopt;
  auto height_gap = [&](double t) {
    const Eigen::Vector3d p = origin + t * dir;
    return p.z() - dem.sample(p.x(), p.y());
  };
  double t = 0.0;
  if (origin.z() > dem.max_height()) t = (origin.z() - dem.max_height()) / -dir.z();
  double f = height_gap(t);
  if (std::isnan(f)) return std::nullopt;
  if (std::abs(f) < 1e-9) return t;  // the surface touches the start plane here
  if (f <= 0.0) {
    // Started numerically just under the max-height plane.
    return t > 0.0 || f == 0.0 ? std::optional<double>(t) : std::nullopt;
  }
  const double step = dem.cell_size() / 4.0;
  // Below min_height the ray can no longer meet the surface.
  const double t_limit = (origin.z() - dem.min_height()) / -dir.z() + step;
  double t_prev = t, f_prev = f;
  while (true) {
    t += step;
    f = height_gap(t);
    if (std::isnan(f)) return std::nullopt;
    if (f <= 0.0) break;
    if (t > t_limit) return std::nullopt;
    t_prev = t;
    f_prev = f;
  }
  // Bracket [t_prev, t] with f_prev > 0 >= f.
  double lo = t_prev, hi = t, f_lo = f_prev, f_hi = f;
  for (int it = 0; it < 64 && std::abs(f_hi) >= 0.01; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = height_gap(mid);
    if (std::isnan(fm)) return std::nullopt;
    if (fm > 0.0) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
      f_hi = fm;
    }
    if (std::abs(fm) < 0.01) break;
  }
  // Final false-position step inside the bracket; exact on planar ground.
  double best_t = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
  double best_f = std::min(std::abs(f_lo), std::abs(f_hi));
  if (f_lo != f_hi) {
    const double ts = lo + (hi - lo) * f_lo / (f_lo - f_hi);
    const double fs = height_gap(ts);
    if (!std::isnan(fs) && std::abs(fs) <= best_f) best_t = ts;
  }
  return best_t;
}

std::optional<Eigen::Vector3d> pixel_ray_to_ground(const Pose& pose, const CameraIntrinsics& intr,
                                                   const Eigen::Vector2d& pixel, const ElevationModel& dem) {
  const PinholeCamera cam(pose, intr);
  const Eigen::Vector3d dir = cam.ray_direction(pixel.x(), pixel.y());
  const auto t = intersect_ground(dem, cam.center(), dir);
  if (!t) return std::nullopt;
  return Eigen::Vector3d(cam.center() + *t * dir);
}

// --- Geo --------------------------------------------------------------------------

namespace {
constexpr double kEarthRadius = 6378137.0;
}

Eigen::Vector2d GeoOrigin::to_local(double lat, double lon) const {
  const double x = (lon - longitude_deg) * kDeg * kEarthRadius * std::cos(latitude_deg * kDeg);
  const double y = (lat - latitude_deg) * kDeg * kEarthRadius;
  return {x, y};
}

Eigen::Vector2d GeoOrigin::to_geo(const Eigen::Vector2d& xy) const {
  const double lat = latitude_deg + xy.y() / kEarthRadius / kDeg;
  const double lon = longitude_deg + xy.x() / (kEarthRadius * std::cos(latitude_deg * kDeg)) / kDeg;
  return {lat, lon};
}

}  // namespace aos
