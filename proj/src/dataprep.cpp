#include "tcbct/dataprep.hpp"

#include <cmath>
#include <set>

#include "raw_io.hpp"
#include "tcbct/checksum.hpp"
#include "tcbct/error.hpp"
#include "tcbct/projector.hpp"

namespace tcbct {

namespace fs = std::filesystem;

std::string_view to_string(PairMode mode) {
  return mode == PairMode::Conventional ? "conventional" : "task-specific";
}

PairMode pair_mode_from_string(std::string_view name) {
  if (name == "conventional") return PairMode::Conventional;
  if (name == "task-specific") return PairMode::TaskSpecific;
  throw Error("unknown pair mode '" + std::string(name) + "'");
}

std::string_view to_string(SliceAxis axis) {
  switch (axis) {
    case SliceAxis::Axial: return "axial";
    case SliceAxis::Coronal: return "coronal";
    case SliceAxis::Sagittal: return "sagittal";
  }
  return "?";
}

SliceAxis slice_axis_from_string(std::string_view name) {
  if (name == "axial") return SliceAxis::Axial;
  if (name == "coronal") return SliceAxis::Coronal;
  if (name == "sagittal") return SliceAxis::Sagittal;
  throw Error("unknown slice axis '" + std::string(name) + "'");
}

std::string geometry_hash(const SystemGeometry& geom) { return crc32_hex(geom.to_json().dump()); }

namespace {

nlohmann::json provenance(const PrepOptions& opts, PairMode mode, const SystemGeometry& geom) {
  nlohmann::json j = {{"volume_id", opts.volume_id},
                      {"mode", to_string(mode)},
                      {"geometry_hash", geometry_hash(geom)},
                      {"options", opts.recon.to_json()}};
  if (opts.noise) {
    j["seed"] = opts.noise->seed;
    j["photons_per_ray"] = opts.noise->photons_per_ray;
  } else {
    j["seed"] = nullptr;
    j["photons_per_ray"] = nullptr;
  }
  return j;
}

ProjectionStack maybe_noisy(const ProjectionStack& p, const PrepOptions& opts) {
  return opts.noise ? add_poisson_noise(p, opts.noise->photons_per_ray, opts.noise->seed) : p;
}

void add_into(Volume3D& acc, const Volume3D& term) {
  auto a = acc.values();
  const auto b = term.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace

TrainingPair prepare_conventional(const Volume3D& f_hu, const SystemGeometry& geom, const PrepOptions& opts) {
  if (f_hu.unit() != Unit::HU) throw Error("prepare_conventional: volume must be in HU");
  const Volume3D mu = hu_to_mu(f_hu, opts.recon.mu_water);
  const ProjectionStack untruncated = forward_project(mu, geom, DetectorKind::Virtual);
  const ProjectionStack truncated = crop_to_physical(untruncated);
  return TrainingPair{reconstruct(maybe_noisy(truncated, opts), opts.recon), reconstruct(untruncated, opts.recon),
                      PairMode::Conventional, provenance(opts, PairMode::Conventional, geom), std::nullopt};
}

TrainingPair prepare_task_specific(const Volume3D& f_hu, const MaskVolume& soi, const SystemGeometry& geom,
                                   const PrepOptions& opts) {
  if (f_hu.unit() != Unit::HU) throw Error("prepare_task_specific: volume must be in HU");
  if (!(soi.grid() == f_hu.grid())) throw Error("prepare_task_specific: mask grid does not match the volume");
  const Volume3D mu = hu_to_mu(f_hu, opts.recon.mu_water);
  const auto [f_soi, f_others] = split_by_mask(mu, soi);

  const ProjectionStack truncated = forward_project(mu, geom, DetectorKind::Physical);
  const ProjectionStack soi_untruncated = forward_project(f_soi, geom, DetectorKind::Virtual);
  const ProjectionStack others_truncated = forward_project(f_others, geom, DetectorKind::Physical);

  Volume3D input = reconstruct(maybe_noisy(truncated, opts), opts.recon);
  Volume3D others = reconstruct_attenuation(others_truncated, opts.recon);
  add_into(others, reconstruct_attenuation(soi_untruncated, opts.recon));
  TrainingPair pair{std::move(input), mu_to_hu(others, opts.recon.mu_water), PairMode::TaskSpecific,
                    provenance(opts, PairMode::TaskSpecific, geom), std::nullopt};

  if (opts.report_residual) {
    Volume3D residual = reconstruct_attenuation(truncated, opts.recon);
    const Volume3D r_others = reconstruct_attenuation(others_truncated, opts.recon);
    const Volume3D r_soi = reconstruct_attenuation(crop_to_physical(soi_untruncated), opts.recon);
    double sum = 0.0;
    for (std::size_t i = 0; i < residual.values().size(); ++i) {
      const double d = static_cast<double>(residual.values()[i]) - r_others.values()[i] - r_soi.values()[i];
      sum += d * d;
    }
    const double rms = std::sqrt(sum / static_cast<double>(residual.values().size()));
    pair.decomposition_residual_hu = rms * 1000.0 / opts.recon.mu_water;
    pair.provenance["decomposition_residual_hu"] = *pair.decomposition_residual_hu;
  }
  return pair;
}

std::vector<float> extract_slice(const Volume3D& vol, SliceAxis axis, int index) {
  const auto& d = vol.grid().dims;
  const int axis_dim = axis == SliceAxis::Axial ? d[2] : axis == SliceAxis::Coronal ? d[1] : d[0];
  if (index < 0 || index >= axis_dim) throw Error("extract_slice: index out of range");
  std::vector<float> out;
  switch (axis) {
    case SliceAxis::Axial: {
      const auto src = vol.values().subspan(vol.grid().index(0, 0, index), static_cast<std::size_t>(d[0]) * d[1]);
      out.assign(src.begin(), src.end());
      break;
    }
    case SliceAxis::Coronal:
      out.reserve(static_cast<std::size_t>(d[0]) * d[2]);
      for (int k = 0; k < d[2]; ++k)
        for (int i = 0; i < d[0]; ++i) out.push_back(vol.at(i, index, k));
      break;
    case SliceAxis::Sagittal:
      out.reserve(static_cast<std::size_t>(d[1]) * d[2]);
      for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j) out.push_back(vol.at(index, j, k));
      break;
  }
  return out;
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : entries)
    list.push_back({{"pair_id", e.pair_id},
                    {"slice", e.slice},
                    {"axis", to_string(e.axis)},
                    {"input", e.input},
                    {"label", e.label},
                    {"mode", to_string(e.mode)},
                    {"width", e.width},
                    {"height", e.height}});
  return {{"format", "float32-le"},
          {"units", "HU"},
          {"grid", grid},
          {"geometry", geometry},
          {"seed", seed ? nlohmann::json(*seed) : nlohmann::json(nullptr)},
          {"mu_water", mu_water},
          {"entries", list}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.grid = j.at("grid");
    m.geometry = j.at("geometry");
    if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    m.mu_water = j.at("mu_water").get<double>();
    for (const auto& e : j.at("entries"))
      m.entries.push_back({e.at("pair_id").get<int>(), e.at("slice").get<int>(),
                           slice_axis_from_string(e.at("axis").get<std::string>()), e.at("input").get<std::string>(),
                           e.at("label").get<std::string>(), pair_mode_from_string(e.at("mode").get<std::string>()),
                           e.at("width").get<int>(), e.at("height").get<int>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

DatasetManifest export_slices(const std::vector<TrainingPair>& pairs, SliceAxis axis, int begin, int end,
                              const fs::path& out_dir, const SystemGeometry& geom) {
  if (pairs.empty()) throw Error("export_slices: no pairs");
  if (begin >= end) throw Error("export_slices: empty slice range");
  const Grid& grid = pairs.front().input.grid();
  const auto& d = grid.dims;
  const int axis_dim = axis == SliceAxis::Axial ? d[2] : axis == SliceAxis::Coronal ? d[1] : d[0];
  if (begin < 0 || end > axis_dim) throw Error("export_slices: slice range outside the grid");
  for (const auto& p : pairs)
    if (!(p.input.grid() == grid) || !(p.label.grid() == grid))
      throw Error("export_slices: all pairs must share one grid");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("export_slices: cannot create '" + out_dir.string() + "': " + ec.message());

  const int width = axis == SliceAxis::Sagittal ? d[1] : d[0];
  const int height = axis == SliceAxis::Axial ? d[1] : d[2];

  DatasetManifest manifest;
  manifest.grid = grid_to_json(grid);
  manifest.geometry = geom.to_json();
  const auto& prov = pairs.front().provenance;
  if (prov.contains("seed") && !prov["seed"].is_null()) manifest.seed = prov["seed"].get<std::uint64_t>();
  if (prov.contains("options")) manifest.mu_water = prov["options"].value("mu_water", kDefaultMuWater);

  for (std::size_t p = 0; p < pairs.size(); ++p)
    for (int s = begin; s < end; ++s) {
      const std::string stem = "pair" + std::to_string(p) + "_slice" + std::to_string(s);
      ManifestEntry e{static_cast<int>(p), s, axis, stem + "_input.raw", stem + "_label.raw", pairs[p].mode,
                      width, height};
      detail::write_f32_le(out_dir / e.input, extract_slice(pairs[p].input, axis, s));
      detail::write_f32_le(out_dir / e.label, extract_slice(pairs[p].label, axis, s));
      manifest.entries.push_back(std::move(e));
    }
  detail::write_json(out_dir / kManifestName, manifest.to_json());
  return manifest;
}

DatasetManifest load_manifest(const fs::path& path) { return DatasetManifest::from_json(detail::read_json(path)); }

std::vector<float> load_slice(const fs::path& dir, const std::string& file, int width, int height) {
  if (width <= 0 || height <= 0) throw Error("load_slice: invalid dims");
  return detail::read_f32_le(dir / file, static_cast<std::size_t>(width) * height);
}

MaskVolume fov_cylinder_mask(const Grid& grid, const SystemGeometry& geom) {
  grid.validate();
  const double r = geom.fov_radius_mm(DetectorKind::Physical);
  MaskVolume mask(grid);
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i) {
        const double x = grid.center_coord(0, i), y = grid.center_coord(1, j);
        mask.set(i, j, k, std::hypot(x, y) <= r);
      }
  return mask;
}

}  // namespace tcbct
