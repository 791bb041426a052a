#include "tcbct/geometry.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "tcbct/error.hpp"

namespace tcbct {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

template <typename T>
T read_key(const nlohmann::json& config, const char* key, T fallback) {
  if (!config.contains(key)) return fallback;
  const auto& value = config.at(key);
  if (!value.is_number()) throw Error(std::string("geometry: '") + key + "' must be a number");
  if constexpr (std::is_integral_v<T>) {
    if (!value.is_number_integer()) throw Error(std::string("geometry: '") + key + "' must be an integer");
  }
  return value.get<T>();
}

}  // namespace

std::string_view to_string(DetectorKind kind) {
  return kind == DetectorKind::Physical ? "physical" : "virtual";
}

DetectorKind detector_kind_from_string(std::string_view name) {
  if (name == "physical") return DetectorKind::Physical;
  if (name == "virtual") return DetectorKind::Virtual;
  throw Error("unknown detector kind '" + std::string(name) + "'");
}

SystemGeometry::Params SystemGeometry::table1() { return Params{}; }

SystemGeometry::Params SystemGeometry::desk() {
  Params p;
  p.det_cols = 125;
  p.det_rows = 170;
  p.virt_cols = 301;  // virt - det must stay even so pixel centres coincide
  p.pixel_w_mm = 4 * 0.608;
  p.pixel_h_mm = 4 * 0.608;
  p.angular_step_deg = 1.0;
  return p;
}

SystemGeometry::SystemGeometry(const Params& params) : p_(params) {
  if (!(p_.sid_mm > 0.0)) throw Error("geometry: sid_mm must be positive");
  if (!(p_.sdd_mm > p_.sid_mm)) throw Error("geometry: sdd_mm must exceed sid_mm");
  if (p_.det_cols < 1 || p_.det_rows < 1) throw Error("geometry: detector size must be positive");
  if (p_.virt_cols < p_.det_cols) throw Error("geometry: virt_cols must be >= det_cols");
  if ((p_.virt_cols - p_.det_cols) % 2 != 0)
    throw Error("geometry: virt_cols - det_cols must be even so both detectors share pixel centres");
  if (!(p_.pixel_w_mm > 0.0) || !(p_.pixel_h_mm > 0.0)) throw Error("geometry: pixel pitch must be positive");
  if (!(p_.angular_step_deg > 0.0)) throw Error("geometry: angular_step_deg must be positive");
  if (!(p_.angular_range_deg > 0.0)) throw Error("geometry: angular_range_deg must be positive");
  if (!std::isfinite(p_.start_angle_deg)) throw Error("geometry: start_angle_deg must be finite");
  if (p_.rotation_direction != 1 && p_.rotation_direction != -1)
    throw Error("geometry: rotation_direction must be +1 or -1");

  const double views = p_.angular_range_deg / p_.angular_step_deg;
  const double rounded = std::round(views);
  if (rounded < 1.0 || std::abs(views - rounded) > 1e-9 * std::max(1.0, views))
    throw Error("geometry: angular_range_deg / angular_step_deg must be a positive integer");
  n_views_ = static_cast<int>(rounded);
}

std::vector<double> SystemGeometry::view_angles_deg() const {
  std::vector<double> angles(n_views_);
  for (int k = 0; k < n_views_; ++k)
    angles[k] = p_.start_angle_deg + p_.rotation_direction * k * p_.angular_step_deg;
  return angles;
}

double SystemGeometry::view_angle_rad(int view) const {
  return (p_.start_angle_deg + p_.rotation_direction * view * p_.angular_step_deg) * kDegToRad;
}

double SystemGeometry::half_fan_angle_rad(DetectorKind kind) const {
  return std::atan(cols(kind) * p_.pixel_w_mm * 0.5 / p_.sdd_mm);
}

Vec3 SystemGeometry::source_position(int view) const {
  const double beta = view_angle_rad(view);
  return {p_.sid_mm * std::cos(beta), p_.sid_mm * std::sin(beta), 0.0};
}

Ray SystemGeometry::ray_for_pixel(int view, int row, int col, DetectorKind kind) const {
  if (view < 0 || view >= n_views_ || row < 0 || row >= p_.det_rows || col < 0 || col >= cols(kind))
    throw Error("ray_for_pixel: index out of bounds");
  const double beta = view_angle_rad(view);
  return ray_for_offsets(std::cos(beta), std::sin(beta), column_offset_mm(col, kind), row_offset_mm(row));
}

Ray SystemGeometry::ray_for_offsets(double cb, double sb, double u, double v) const {
  // Source to pixel: -sdd along the source axis, u along e_u, v along z.
  const Vec3 d{-p_.sdd_mm * cb - u * sb, -p_.sdd_mm * sb + u * cb, v};
  const double len = norm(d);
  return {{p_.sid_mm * cb, p_.sid_mm * sb, 0.0}, (1.0 / len) * d};
}

double fov_radius_mm(double sid_mm, double sdd_mm, double detector_half_width_mm) {
  return sid_mm * std::sin(std::atan(detector_half_width_mm / sdd_mm));
}

double SystemGeometry::fov_radius_mm(DetectorKind kind) const {
  return tcbct::fov_radius_mm(p_.sid_mm, p_.sdd_mm, cols(kind) * p_.pixel_w_mm * 0.5);
}

nlohmann::json SystemGeometry::to_json() const {
  return {
      {"sdd_mm", p_.sdd_mm},
      {"sid_mm", p_.sid_mm},
      {"det_cols", p_.det_cols},
      {"det_rows", p_.det_rows},
      {"virt_cols", p_.virt_cols},
      {"pixel_w_mm", p_.pixel_w_mm},
      {"pixel_h_mm", p_.pixel_h_mm},
      {"angular_range_deg", p_.angular_range_deg},
      {"angular_step_deg", p_.angular_step_deg},
      {"start_angle_deg", p_.start_angle_deg},
      {"rotation_direction", p_.rotation_direction},
  };
}

bool operator==(const SystemGeometry& a, const SystemGeometry& b) {
  const auto& p = a.p_;
  const auto& q = b.p_;
  return p.sdd_mm == q.sdd_mm && p.sid_mm == q.sid_mm && p.det_cols == q.det_cols &&
         p.det_rows == q.det_rows && p.virt_cols == q.virt_cols && p.pixel_w_mm == q.pixel_w_mm &&
         p.pixel_h_mm == q.pixel_h_mm && p.angular_range_deg == q.angular_range_deg &&
         p.angular_step_deg == q.angular_step_deg && p.start_angle_deg == q.start_angle_deg &&
         p.rotation_direction == q.rotation_direction;
}

SystemGeometry build_geometry(const nlohmann::json& config) {
  return build_geometry(config, SystemGeometry::table1());
}

SystemGeometry build_geometry(const nlohmann::json& config, const SystemGeometry::Params& defaults) {
  if (!config.is_object()) throw Error("geometry: config must be an object");
  static const std::set<std::string> known = {
      "sdd_mm",     "sid_mm",           "det_cols",         "det_rows",
      "virt_cols",  "pixel_w_mm",       "pixel_h_mm",       "angular_range_deg",
      "angular_step_deg", "start_angle_deg", "rotation_direction", "preset"};
  for (const auto& [key, _] : config.items())
    if (!known.contains(key)) throw Error("geometry: unknown key '" + key + "'");

  SystemGeometry::Params p = defaults;
  if (config.contains("preset")) {
    const auto preset = config.at("preset").get<std::string>();
    if (preset == "table1") p = SystemGeometry::table1();
    else if (preset == "desk") p = SystemGeometry::desk();
    else throw Error("geometry: unknown preset '" + preset + "'");
  }
  p.sdd_mm = read_key(config, "sdd_mm", p.sdd_mm);
  p.sid_mm = read_key(config, "sid_mm", p.sid_mm);
  p.det_cols = read_key(config, "det_cols", p.det_cols);
  p.det_rows = read_key(config, "det_rows", p.det_rows);
  p.virt_cols = read_key(config, "virt_cols", p.virt_cols);
  p.pixel_w_mm = read_key(config, "pixel_w_mm", p.pixel_w_mm);
  p.pixel_h_mm = read_key(config, "pixel_h_mm", p.pixel_h_mm);
  p.angular_range_deg = read_key(config, "angular_range_deg", p.angular_range_deg);
  p.angular_step_deg = read_key(config, "angular_step_deg", p.angular_step_deg);
  p.start_angle_deg = read_key(config, "start_angle_deg", p.start_angle_deg);
  p.rotation_direction = read_key(config, "rotation_direction", p.rotation_direction);
  return SystemGeometry(p);
}

}  // namespace tcbct
