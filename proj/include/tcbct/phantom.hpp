#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tcbct/geometry.hpp"
#include "tcbct/volume.hpp"

namespace tcbct {

enum class Axis { X, Y, Z };

/// Axis-aligned ellipsoid.
struct Ellipsoid {
  Vec3 center;
  Vec3 semi_axes;
  double value_hu = 0.0;  // added on top of the -1000 HU air background
};

/// Finite cylinder with an elliptical cross-section. semi_a/semi_b are the
/// semi-axes along the first/second remaining world axes in (x, y, z) order,
/// e.g. (x, y) for a z-aligned cylinder.
struct Cylinder {
  Vec3 center;
  double semi_a = 1.0;
  double semi_b = 1.0;
  double height = 1.0;
  Axis axis = Axis::Z;
  double value_hu = 0.0;
};

using Primitive = std::variant<Ellipsoid, Cylinder>;

/// Additive composition of primitives over air.
struct PhantomSpec {
  std::string name;
  std::vector<Primitive> primitives;
};

double primitive_value_hu(const Primitive& p);
bool contains(const Primitive& p, Vec3 point);
/// Length of the intersection of the ray's half-line (t >= 0) with the primitive.
double chord_length(const Primitive& p, const Ray& ray);

/// Voxel = -1000 + sum of values of primitives containing the voxel centre.
Volume3D rasterize_phantom(const PhantomSpec& spec, const Grid& grid);

/// Centred z-aligned water cylinder (0 HU inside).
PhantomSpec water_cylinder_phantom(double radius_mm, double height_mm);
/// Three nested/overlapping ellipsoids: a water body and two denser inserts.
PhantomSpec three_ellipsoid_phantom();
/// Elliptical soft-tissue body extending past the physical FOV, a liver-like
/// insert, a vertebra and a ring of rib rods outside the FOV.
PhantomSpec rib_ring_phantom();

nlohmann::json phantom_to_json(const PhantomSpec& spec);
PhantomSpec phantom_from_json(const nlohmann::json& j);
/// Resolves {"preset": name, ...} or an explicit primitive list.
PhantomSpec phantom_from_config(const nlohmann::json& j);

}  // namespace tcbct
