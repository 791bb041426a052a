#include "tcbct/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "raw_io.hpp"
#include "tcbct/error.hpp"

namespace tcbct {

std::string_view to_string(Unit unit) { return unit == Unit::HU ? "HU" : "attenuation"; }

Unit unit_from_string(std::string_view name) {
  if (name == "HU") return Unit::HU;
  if (name == "attenuation") return Unit::Attenuation;
  throw Error("unknown unit '" + std::string(name) + "'");
}

void Grid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] <= 0) throw Error("grid: dims must be positive");
    if (!(voxel_mm[a] > 0.0) || !std::isfinite(voxel_mm[a])) throw Error("grid: voxel size must be positive");
    if (!std::isfinite(offset_mm[a])) throw Error("grid: offset must be finite");
  }
}

nlohmann::json grid_to_json(const Grid& grid) {
  return {{"dims", grid.dims}, {"voxel_mm", grid.voxel_mm}, {"offset_mm", grid.offset_mm}};
}

Grid grid_from_json(const nlohmann::json& j) {
  Grid g;
  try {
    g.dims = j.at("dims").get<std::array<int, 3>>();
    g.voxel_mm = j.at("voxel_mm").get<std::array<double, 3>>();
    if (j.contains("offset_mm")) g.offset_mm = j.at("offset_mm").get<std::array<double, 3>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("grid: malformed description: ") + e.what());
  }
  g.validate();
  return g;
}

Volume3D::Volume3D(Grid grid, Unit unit, float fill) : grid_(grid), unit_(unit) {
  grid_.validate();
  values_.assign(grid_.size(), fill);
}

Volume3D::Volume3D(Grid grid, Unit unit, std::vector<float> values)
    : grid_(grid), unit_(unit), values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != grid_.size()) throw Error("volume: value count does not match dims");
}

MaskVolume::MaskVolume(Grid grid, bool fill) : grid_(grid) {
  grid_.validate();
  values_.assign(grid_.size(), fill ? 1 : 0);
}

MaskVolume::MaskVolume(Grid grid, std::vector<std::uint8_t> values)
    : grid_(grid), values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != grid_.size()) throw Error("mask: value count does not match dims");
  for (auto& v : values_)
    if (v > 1) throw Error("mask: values must be 0 or 1");
}

std::size_t MaskVolume::count() const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

MaskVolume MaskVolume::complement() const {
  MaskVolume out = *this;
  for (auto& v : out.values_) v = 1 - v;
  return out;
}

MaskVolume operator&(const MaskVolume& a, const MaskVolume& b) {
  if (!(a.grid_ == b.grid_)) throw Error("mask: grid mismatch");
  MaskVolume out = a;
  for (std::size_t i = 0; i < out.values_.size(); ++i) out.values_[i] &= b.values_[i];
  return out;
}

Volume3D hu_to_mu(const Volume3D& vol, double mu_water) {
  if (vol.unit() != Unit::HU) throw Error("hu_to_mu: input must be in HU");
  Volume3D out(vol.grid(), Unit::Attenuation);
  auto src = vol.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = static_cast<float>(std::max(0.0, mu_water * (1.0 + src[i] / 1000.0)));
  return out;
}

Volume3D mu_to_hu(const Volume3D& vol, double mu_water) {
  if (vol.unit() != Unit::Attenuation) throw Error("mu_to_hu: input must be attenuation");
  Volume3D out(vol.grid(), Unit::HU);
  auto src = vol.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = static_cast<float>(1000.0 * (src[i] / mu_water - 1.0));
  return out;
}

std::pair<Volume3D, Volume3D> split_by_mask(const Volume3D& f, const MaskVolume& m) {
  if (f.unit() != Unit::Attenuation) throw Error("split_by_mask: volume must be attenuation");
  if (!(f.grid() == m.grid())) throw Error("split_by_mask: grid mismatch");
  Volume3D soi(f.grid(), Unit::Attenuation);
  Volume3D others(f.grid(), Unit::Attenuation);
  auto src = f.values();
  auto mv = m.values();
  auto a = soi.values();
  auto b = others.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    // One side receives the value, the other an exact zero.
    if (mv[i]) a[i] = src[i];
    else b[i] = src[i];
  }
  return {std::move(soi), std::move(others)};
}

MaskVolume threshold_segment(const Volume3D& vol, double hu_threshold) {
  if (vol.unit() != Unit::HU) throw Error("threshold_segment: volume must be in HU");
  MaskVolume out(vol.grid());
  auto src = vol.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= hu_threshold ? 1 : 0;
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& raw_path) {
  return std::filesystem::path(raw_path.string() + ".json");
}

namespace {

nlohmann::json volume_header(const Grid& grid, std::string_view unit) {
  auto j = grid_to_json(grid);
  j["unit"] = unit;
  return j;
}

std::pair<Grid, std::string> read_header(const std::filesystem::path& path) {
  const auto header = detail::read_json(sidecar_path(path));
  try {
    return {grid_from_json(header), header.at("unit").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error("volume header '" + sidecar_path(path).string() + "' is missing fields: " + e.what());
  }
}

}  // namespace

void save_volume(const Volume3D& vol, const std::filesystem::path& path) {
  detail::write_f32_le(path, vol.values());
  detail::write_json(sidecar_path(path), volume_header(vol.grid(), to_string(vol.unit())));
}

Volume3D load_volume(const std::filesystem::path& path) {
  auto [grid, unit] = read_header(path);
  auto values = detail::read_f32_le(path, grid.size());
  return Volume3D(grid, unit_from_string(unit), std::move(values));
}

void save_mask(const MaskVolume& mask, const std::filesystem::path& path) {
  std::vector<float> values(mask.values().begin(), mask.values().end());
  detail::write_f32_le(path, values);
  detail::write_json(sidecar_path(path), volume_header(mask.grid(), "mask"));
}

MaskVolume load_mask(const std::filesystem::path& path) {
  auto [grid, unit] = read_header(path);
  const auto values = detail::read_f32_le(path, grid.size());
  std::vector<std::uint8_t> bits(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0f && values[i] != 1.0f)
      throw Error("mask '" + path.string() + "' contains values other than 0 and 1");
    bits[i] = values[i] == 1.0f ? 1 : 0;
  }
  return MaskVolume(grid, std::move(bits));
}

}  // namespace tcbct
