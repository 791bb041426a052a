#pragma once

#include <cmath>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tcbct {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

/// Half-line starting at the source; direction has unit length.
struct Ray {
  Vec3 origin;
  Vec3 direction;

  Vec3 at(double t) const { return origin + t * direction; }
};

/// Physical flat panel (truncating) or the wider virtual panel used for
/// untruncated simulation and extrapolation. Both share the same centre.
enum class DetectorKind { Physical, Virtual };

std::string_view to_string(DetectorKind kind);
DetectorKind detector_kind_from_string(std::string_view name);

/// Circular-trajectory cone-beam scanner with a flat detector.
///
/// World frame: isocenter at the origin, rotation axis z, detector rows run
/// along z. At scan angle beta the source sits at sid * (cos beta, sin beta, 0)
/// and the detector u-axis is (-sin beta, cos beta, 0). Angles advance by
/// rotation_direction * k * angular_step from start_angle.
class SystemGeometry {
 public:
  struct Params {
    double sdd_mm = 1164.0;
    double sid_mm = 622.0;
    int det_cols = 500;
    int det_rows = 680;
    int virt_cols = 1200;
    double pixel_w_mm = 0.608;
    double pixel_h_mm = 0.608;
    double angular_range_deg = 200.0;
    double angular_step_deg = 0.5;
    double start_angle_deg = 0.0;
    int rotation_direction = 1;  // +1 counter-clockwise seen from +z, -1 clockwise
  };

  /// Full-scale mobile C-arm parameters.
  static Params table1();
  /// Same physical extent as table1() with 4x coarser pixels and a 1 degree
  /// step; pairs with the 128^3 x 2.5 mm grid.
  static Params desk();

  explicit SystemGeometry(const Params& params);

  const Params& params() const { return p_; }
  double sdd_mm() const { return p_.sdd_mm; }
  double sid_mm() const { return p_.sid_mm; }
  int det_rows() const { return p_.det_rows; }
  int cols(DetectorKind kind) const {
    return kind == DetectorKind::Physical ? p_.det_cols : p_.virt_cols;
  }
  /// Index of physical column 0 within the virtual detector.
  int physical_column_offset() const { return (p_.virt_cols - p_.det_cols) / 2; }
  int n_views() const { return n_views_; }

  std::vector<double> view_angles_deg() const;
  double view_angle_rad(int view) const;
  /// Scan progress of a view (deg), always increasing from 0.
  double view_progress_deg(int view) const { return view * p_.angular_step_deg; }

  /// Detector coordinates of a pixel centre (mm), relative to the piercing point.
  double column_offset_mm(int col, DetectorKind kind) const {
    return (col - (cols(kind) - 1) * 0.5) * p_.pixel_w_mm;
  }
  double row_offset_mm(int row) const { return (row - (p_.det_rows - 1) * 0.5) * p_.pixel_h_mm; }
  /// Fan angle of a column centre (rad), positive towards +u.
  double fan_angle_rad(int col, DetectorKind kind) const {
    return std::atan(column_offset_mm(col, kind) / p_.sdd_mm);
  }
  /// Half opening angle of the detector edge (rad).
  double half_fan_angle_rad(DetectorKind kind) const;

  Vec3 source_position(int view) const;
  Ray ray_for_pixel(int view, int row, int col, DetectorKind kind) const;
  /// Same ray as ray_for_pixel from a precomputed view angle and detector
  /// offsets; lets hot loops hoist the trigonometry.
  Ray ray_for_offsets(double cos_beta, double sin_beta, double u_mm, double v_mm) const;

  double fov_radius_mm(DetectorKind kind) const;

  nlohmann::json to_json() const;
  friend bool operator==(const SystemGeometry& a, const SystemGeometry& b);

 private:
  Params p_;
  int n_views_ = 0;
};

/// Radius of the cylinder seen at every view by a detector of the given
/// half-width (mm, at the detector).
double fov_radius_mm(double sid_mm, double sdd_mm, double detector_half_width_mm);

/// Builds and validates a geometry from a parameter map. Missing keys take
/// the table1() defaults; present keys must have the right sign and type.
SystemGeometry build_geometry(const nlohmann::json& config);
SystemGeometry build_geometry(const nlohmann::json& config, const SystemGeometry::Params& defaults);

}  // namespace tcbct
