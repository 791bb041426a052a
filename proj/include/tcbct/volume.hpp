#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tcbct/geometry.hpp"

namespace tcbct {

enum class Unit { HU, Attenuation };

std::string_view to_string(Unit unit);
Unit unit_from_string(std::string_view name);

/// Default water attenuation (mm^-1), roughly 70 keV effective energy.
inline constexpr double kDefaultMuWater = 0.0193;

/// Regular voxel grid centred at offset_mm; x runs fastest, then y, then z.
struct Grid {
  std::array<int, 3> dims{1, 1, 1};
  std::array<double, 3> voxel_mm{1.0, 1.0, 1.0};
  std::array<double, 3> offset_mm{0.0, 0.0, 0.0};

  /// 128^3 at 2.5 mm: same extent as 512^3 at 0.625 mm.
  static Grid desk() { return {{128, 128, 128}, {2.5, 2.5, 2.5}, {0.0, 0.0, 0.0}}; }
  static Grid table1() { return {{512, 512, 512}, {0.625, 0.625, 0.625}, {0.0, 0.0, 0.0}}; }

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  double center_coord(int axis, int i) const {
    return offset_mm[axis] + (i - (dims[axis] - 1) * 0.5) * voxel_mm[axis];
  }
  Vec3 voxel_center(int i, int j, int k) const {
    return {center_coord(0, i), center_coord(1, j), center_coord(2, k)};
  }
  /// Throws unless dims and voxel sizes are positive and finite.
  void validate() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

nlohmann::json grid_to_json(const Grid& grid);
Grid grid_from_json(const nlohmann::json& j);

/// Scalar volume in HU or linear attenuation (mm^-1).
class Volume3D {
 public:
  Volume3D(Grid grid, Unit unit, float fill = 0.0f);
  Volume3D(Grid grid, Unit unit, std::vector<float> values);

  const Grid& grid() const { return grid_; }
  Unit unit() const { return unit_; }
  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }
  float at(int i, int j, int k) const { return values_[grid_.index(i, j, k)]; }
  float& at(int i, int j, int k) { return values_[grid_.index(i, j, k)]; }

  friend bool operator==(const Volume3D&, const Volume3D&) = default;

 private:
  Grid grid_;
  Unit unit_;
  std::vector<float> values_;
};

/// Binary mask on the grid of a companion volume.
class MaskVolume {
 public:
  explicit MaskVolume(Grid grid, bool fill = false);
  MaskVolume(Grid grid, std::vector<std::uint8_t> values);

  const Grid& grid() const { return grid_; }
  std::span<const std::uint8_t> values() const { return values_; }
  std::span<std::uint8_t> values() { return values_; }
  bool at(int i, int j, int k) const { return values_[grid_.index(i, j, k)] != 0; }
  void set(int i, int j, int k, bool on) { values_[grid_.index(i, j, k)] = on ? 1 : 0; }
  std::size_t count() const;

  MaskVolume complement() const;
  friend MaskVolume operator&(const MaskVolume& a, const MaskVolume& b);
  friend bool operator==(const MaskVolume&, const MaskVolume&) = default;

 private:
  Grid grid_;
  std::vector<std::uint8_t> values_;
};

/// mu = mu_water * (1 + HU / 1000), clamped at 0.
Volume3D hu_to_mu(const Volume3D& vol, double mu_water = kDefaultMuWater);
/// HU = 1000 * (mu / mu_water - 1); no clamping.
Volume3D mu_to_hu(const Volume3D& vol, double mu_water = kDefaultMuWater);

/// Exact partition of an attenuation volume: (f * m, f * (1 - m)).
std::pair<Volume3D, Volume3D> split_by_mask(const Volume3D& f, const MaskVolume& m);

/// 1 where HU >= threshold.
MaskVolume threshold_segment(const Volume3D& vol, double hu_threshold);

/// Raw little-endian float32 payload plus a JSON sidecar at `path + ".json"`.
void save_volume(const Volume3D& vol, const std::filesystem::path& path);
Volume3D load_volume(const std::filesystem::path& path);
void save_mask(const MaskVolume& mask, const std::filesystem::path& path);
MaskVolume load_mask(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& raw_path);

}  // namespace tcbct
