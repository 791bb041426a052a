#include "tcbct/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tcbct/error.hpp"

namespace tcbct {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo = kInf;
  double hi = -kInf;
  bool empty() const { return !(lo < hi); }
};

Interval intersect(Interval a, Interval b) { return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)}; }

// {t : a t^2 + b t + c <= 0} for a >= 0.
Interval quadratic_interior(double a, double b, double c) {
  if (a <= 0.0) {
    if (c <= 0.0) return {-kInf, kInf};
    return {};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc <= 0.0) return {};
  const double root = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = -0.5 * (b + std::copysign(root, b));
  double t1 = q / a;
  double t2 = q != 0.0 ? c / q : -t1;
  if (t1 > t2) std::swap(t1, t2);
  return {t1, t2};
}

struct CylinderFrame {
  double a0, b0, axial;  // components of a vector in (a, b, axis) order
};

CylinderFrame to_frame(Vec3 v, Axis axis) {
  switch (axis) {
    case Axis::X: return {v.y, v.z, v.x};
    case Axis::Y: return {v.x, v.z, v.y};
    case Axis::Z: break;
  }
  return {v.x, v.y, v.z};
}

Interval chord_interval(const Ellipsoid& e, const Ray& ray) {
  const Vec3 o = ray.origin - e.center;
  const Vec3 o_s{o.x / e.semi_axes.x, o.y / e.semi_axes.y, o.z / e.semi_axes.z};
  const Vec3 d_s{ray.direction.x / e.semi_axes.x, ray.direction.y / e.semi_axes.y,
                 ray.direction.z / e.semi_axes.z};
  return quadratic_interior(dot(d_s, d_s), 2.0 * dot(o_s, d_s), dot(o_s, o_s) - 1.0);
}

Interval chord_interval(const Cylinder& c, const Ray& ray) {
  const auto o = to_frame(ray.origin - c.center, c.axis);
  const auto d = to_frame(ray.direction, c.axis);
  const double oa = o.a0 / c.semi_a, ob = o.b0 / c.semi_b;
  const double da = d.a0 / c.semi_a, db = d.b0 / c.semi_b;
  Interval radial = quadratic_interior(da * da + db * db, 2.0 * (oa * da + ob * db), oa * oa + ob * ob - 1.0);
  const double half = 0.5 * c.height;
  Interval axial;
  if (d.axial == 0.0) {
    axial = std::abs(o.axial) <= half ? Interval{-kInf, kInf} : Interval{};
  } else {
    const double t1 = (-half - o.axial) / d.axial;
    const double t2 = (half - o.axial) / d.axial;
    axial = {std::min(t1, t2), std::max(t1, t2)};
  }
  return intersect(radial, axial);
}

nlohmann::json vec_json(Vec3 v) { return nlohmann::json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const nlohmann::json& j) {
  const auto a = j.get<std::array<double, 3>>();
  return {a[0], a[1], a[2]};
}

std::string_view axis_name(Axis a) {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: break;
  }
  return "z";
}

Axis axis_from(const std::string& s) {
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  if (s == "z") return Axis::Z;
  throw Error("phantom: unknown axis '" + s + "'");
}

}  // namespace

double primitive_value_hu(const Primitive& p) {
  return std::visit([](const auto& q) { return q.value_hu; }, p);
}

bool contains(const Primitive& p, Vec3 point) {
  if (const auto* e = std::get_if<Ellipsoid>(&p)) {
    const Vec3 d = point - e->center;
    const double x = d.x / e->semi_axes.x, y = d.y / e->semi_axes.y, z = d.z / e->semi_axes.z;
    return x * x + y * y + z * z <= 1.0;
  }
  const auto& c = std::get<Cylinder>(p);
  const auto f = to_frame(point - c.center, c.axis);
  const double a = f.a0 / c.semi_a, b = f.b0 / c.semi_b;
  return a * a + b * b <= 1.0 && std::abs(f.axial) <= 0.5 * c.height;
}

double chord_length(const Primitive& p, const Ray& ray) {
  Interval iv = std::visit([&](const auto& q) { return chord_interval(q, ray); }, p);
  iv = intersect(iv, {0.0, kInf});
  return iv.empty() ? 0.0 : iv.hi - iv.lo;
}

Volume3D rasterize_phantom(const PhantomSpec& spec, const Grid& grid) {
  Volume3D out(grid, Unit::HU, -1000.0f);
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i) {
        const Vec3 c = grid.voxel_center(i, j, k);
        double value = -1000.0;
        for (const auto& p : spec.primitives)
          if (contains(p, c)) value += primitive_value_hu(p);
        out.at(i, j, k) = static_cast<float>(value);
      }
  return out;
}

PhantomSpec water_cylinder_phantom(double radius_mm, double height_mm) {
  return {"water-cylinder", {Cylinder{{0, 0, 0}, radius_mm, radius_mm, height_mm, Axis::Z, 1000.0}}};
}

PhantomSpec three_ellipsoid_phantom() {
  return {"three-ellipsoid",
          {Ellipsoid{{0, 0, 0}, {70, 55, 60}, 1000.0},
           Ellipsoid{{-20, 10, 0}, {18, 12, 20}, 300.0},
           Ellipsoid{{25, -10, 5}, {10, 15, 12}, 800.0}}};
}

PhantomSpec rib_ring_phantom() {
  PhantomSpec spec;
  spec.name = "rib-ring";
  spec.primitives.push_back(Cylinder{{0, 0, 0}, 150, 110, 300, Axis::Z, 1040.0});  // soft-tissue body
  spec.primitives.push_back(Ellipsoid{{-30, 10, 0}, {60, 45, 80}, 20.0});           // liver-like insert
  spec.primitives.push_back(Cylinder{{0, -75, 0}, 14, 14, 300, Axis::Z, 700.0});     // vertebra
  // Rib rods on an ellipse outside the physical FOV, leaving a gap at the spine.
  constexpr int kRibs = 10;
  for (int r = 0; r < kRibs; ++r) {
    const double theta = (-60.0 + r * 30.0) * std::numbers::pi / 180.0;
    const Vec3 c{128.0 * std::cos(theta), 92.0 * std::sin(theta), 0.0};
    spec.primitives.push_back(Cylinder{c, 7, 7, 300, Axis::Z, 800.0});
  }
  return spec;
}

nlohmann::json phantom_to_json(const PhantomSpec& spec) {
  nlohmann::json prims = nlohmann::json::array();
  for (const auto& p : spec.primitives) {
    if (const auto* e = std::get_if<Ellipsoid>(&p)) {
      prims.push_back({{"type", "ellipsoid"},
                       {"center", vec_json(e->center)},
                       {"semi_axes", vec_json(e->semi_axes)},
                       {"value_hu", e->value_hu}});
    } else {
      const auto& c = std::get<Cylinder>(p);
      prims.push_back({{"type", "cylinder"},
                       {"center", vec_json(c.center)},
                       {"semi_axes", {c.semi_a, c.semi_b}},
                       {"height", c.height},
                       {"axis", axis_name(c.axis)},
                       {"value_hu", c.value_hu}});
    }
  }
  return {{"name", spec.name}, {"primitives", prims}};
}

PhantomSpec phantom_from_json(const nlohmann::json& j) {
  PhantomSpec spec;
  try {
    spec.name = j.value("name", std::string("custom"));
    for (const auto& p : j.at("primitives")) {
      const auto type = p.at("type").get<std::string>();
      const double value = p.at("value_hu").get<double>();
      if (type == "ellipsoid") {
        Ellipsoid e{vec_from(p.at("center")), vec_from(p.at("semi_axes")), value};
        if (!(e.semi_axes.x > 0 && e.semi_axes.y > 0 && e.semi_axes.z > 0))
          throw Error("phantom: ellipsoid semi-axes must be positive");
        spec.primitives.emplace_back(e);
      } else if (type == "cylinder") {
        const auto ab = p.at("semi_axes").get<std::array<double, 2>>();
        Cylinder c{vec_from(p.at("center")), ab[0], ab[1], p.at("height").get<double>(),
                   axis_from(p.value("axis", std::string("z"))), value};
        if (!(c.semi_a > 0 && c.semi_b > 0 && c.height > 0))
          throw Error("phantom: cylinder extents must be positive");
        spec.primitives.emplace_back(c);
      } else {
        throw Error("phantom: unknown primitive type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("phantom: malformed description: ") + e.what());
  }
  if (spec.primitives.empty()) throw Error("phantom: at least one primitive is required");
  return spec;
}

PhantomSpec phantom_from_config(const nlohmann::json& j) {
  if (!j.contains("preset")) return phantom_from_json(j);
  const auto preset = j.at("preset").get<std::string>();
  if (preset == "rib-ring") return rib_ring_phantom();
  if (preset == "three-ellipsoid") return three_ellipsoid_phantom();
  if (preset == "water-cylinder")
    return water_cylinder_phantom(j.value("radius_mm", 60.0), j.value("height_mm", 300.0));
  throw Error("phantom: unknown preset '" + preset + "'");
}

}  // namespace tcbct
