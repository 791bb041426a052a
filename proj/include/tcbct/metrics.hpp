#pragma once

#include <cstddef>
#include <optional>

#include <json.hpp>

#include "tcbct/volume.hpp"

namespace tcbct {

/// 2|a & b| / (|a| + |b|); 1 when both masks are empty.
double dice(const MaskVolume& a, const MaskVolume& b);

/// Root-mean-square and mean absolute difference over the voxels of `m`.
/// Throws on an empty mask or mismatched grids/units.
double rmse_in_mask(const Volume3D& x, const Volume3D& y, const MaskVolume& m);
double mae_in_mask(const Volume3D& x, const Volume3D& y, const MaskVolume& m);

struct EvaluationOptions {
  double hu_threshold = 150.0;
  /// Dice over voxels outside the FOV only; false uses the whole volume.
  bool dice_outside_fov_only = true;
};

struct EvaluationReport {
  double dice = 0.0;
  std::optional<double> rmse_in_fov_hu;   // empty when the region has no voxels
  std::optional<double> rmse_out_fov_hu;
  std::optional<double> mae_in_fov_hu;
  std::optional<double> mae_out_fov_hu;
  double threshold_hu = 150.0;
  bool dice_outside_fov_only = true;
  std::size_t soi_voxels = 0;        // reference SOI voxels in the dice region
  std::size_t predicted_voxels = 0;  // thresholded prediction voxels in the dice region
  std::size_t fov_voxels = 0;

  nlohmann::json to_json() const;
};

/// Segments `pred` at the threshold and compares it with `soi_mask`; RMSE and
/// MAE against `reference` inside and outside `fov_mask`.
EvaluationReport evaluate_pair(const Volume3D& pred, const Volume3D& reference, const MaskVolume& soi_mask,
                               const MaskVolume& fov_mask, const EvaluationOptions& opts = {});

}  // namespace tcbct
