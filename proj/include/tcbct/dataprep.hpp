#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tcbct/fdk.hpp"
#include "tcbct/geometry.hpp"
#include "tcbct/volume.hpp"

namespace tcbct {

enum class PairMode { Conventional, TaskSpecific };
std::string_view to_string(PairMode mode);
PairMode pair_mode_from_string(std::string_view name);

struct NoiseSettings {
  double photons_per_ray = 1e6;
  std::uint64_t seed = 0;
};

struct PrepOptions {
  ReconOptions recon;
  /// Applied to the truncated projections of the input only.
  std::optional<NoiseSettings> noise;
  std::string volume_id = "volume";
  /// Task-specific only: also reconstruct the two truncated components and
  /// report how far R(A_TP f) is from their sum.
  bool report_residual = false;
};

struct TrainingPair {
  Volume3D input;   // HU
  Volume3D label;   // HU
  PairMode mode;
  nlohmann::json provenance;
  /// RMS (HU) of R(A_TP f) - R(A_TP f_SOI) - R(A_TP f_Others) when requested.
  std::optional<double> decomposition_residual_hu;
};

/// Stable hex digest of the geometry parameters.
std::string geometry_hash(const SystemGeometry& geom);

/// input = R(A_TP f), label = R(A_UTP f).
TrainingPair prepare_conventional(const Volume3D& f_hu, const SystemGeometry& geom, const PrepOptions& opts);

/// input = R(A_TP f), label = R(A_TP f_Others) + R(A_UTP f_SOI) with the
/// SOI/others split taken on attenuation and the label terms summed before
/// conversion to HU.
TrainingPair prepare_task_specific(const Volume3D& f_hu, const MaskVolume& soi, const SystemGeometry& geom,
                                   const PrepOptions& opts);

enum class SliceAxis { Axial, Coronal, Sagittal };
std::string_view to_string(SliceAxis axis);
SliceAxis slice_axis_from_string(std::string_view name);

struct ManifestEntry {
  int pair_id = 0;
  int slice = 0;
  SliceAxis axis = SliceAxis::Axial;
  std::string input;  // relative to the manifest directory
  std::string label;
  PairMode mode = PairMode::Conventional;
  int width = 0;
  int height = 0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  nlohmann::json grid;
  nlohmann::json geometry;
  std::optional<std::uint64_t> seed;
  double mu_water = kDefaultMuWater;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

inline constexpr const char* kManifestName = "manifest.json";

/// Writes slices [begin, end) of every pair along `axis` as raw float32 HU
/// images named pair{P}_slice{S}_{input|label}.raw plus manifest.json.
/// Axial slices are indexed by z and stored x-fastest; coronal by y (x
/// fastest, z rows); sagittal by x (y fastest, z rows).
DatasetManifest export_slices(const std::vector<TrainingPair>& pairs, SliceAxis axis, int begin, int end,
                              const std::filesystem::path& out_dir, const SystemGeometry& geom);

DatasetManifest load_manifest(const std::filesystem::path& path);
/// Reads one slice image listed in a manifest (path relative to `dir`).
std::vector<float> load_slice(const std::filesystem::path& dir, const std::string& file, int width, int height);
/// Extracts slice `index` of `vol` along `axis` with the layout used on disk.
std::vector<float> extract_slice(const Volume3D& vol, SliceAxis axis, int index);

/// 1 where the voxel centre's axial radius is within the physical FOV.
MaskVolume fov_cylinder_mask(const Grid& grid, const SystemGeometry& geom);

}  // namespace tcbct
