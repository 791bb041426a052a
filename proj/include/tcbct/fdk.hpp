#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "tcbct/projection.hpp"
#include "tcbct/simd.hpp"
#include "tcbct/volume.hpp"

namespace tcbct {

enum class Extrapolation { Wce, Zero, None };
enum class FilterKind { RamLak, SheppLogan };
enum class Redundancy { Parker, Uniform };
/// Which fan Parker weighting is built on. PhysicalFan: columns beyond the
/// physical detector reuse the weight of the nearest physical column.
enum class ParkerPolicy { PhysicalFan, VirtualFan };
enum class DetectorInterpolation { Bilinear, Nearest };

struct ReconOptions {
  Extrapolation extrapolation = Extrapolation::Wce;
  FilterKind filter = FilterKind::RamLak;
  Redundancy redundancy = Redundancy::Parker;
  ParkerPolicy parker_policy = ParkerPolicy::PhysicalFan;
  DetectorInterpolation interpolation = DetectorInterpolation::Bilinear;  // nearest is for debugging
  Grid grid = Grid::desk();
  double mu_water = kDefaultMuWater;
  int cosine_fallback_width = 100;

  nlohmann::json to_json() const;
  /// Reads the keys present in `j` on top of `defaults`; rejects unknown keys.
  static ReconOptions from_json(const nlohmann::json& j, const ReconOptions& defaults);
  static ReconOptions from_json(const nlohmann::json& j);
};

/// Scales each pixel by sdd / sqrt(sdd^2 + u^2 + v^2).
ProjectionStack cosine_weight(const ProjectionStack& p);

/// Parker weight for a ray at scan progress `progress` (rad, from the first
/// view) and signed fan angle `gamma` (rad), for a scan covering
/// pi + 2 delta. Conjugate rays (progress, gamma) and
/// (progress + pi - 2 gamma, -gamma) receive weights summing to one.
double parker_weight(double progress, double gamma, double delta);

struct RedundancyTable {
  int n_views = 0;
  int n_cols = 0;
  std::vector<float> weights;  // view-major
  float at(int view, int col) const { return weights[static_cast<std::size_t>(view) * n_cols + col]; }
};

/// Per-(view, column) redundancy weights for the columns of `kind`.
/// Uniform: 180 deg / angular range everywhere. Parker: throws when the scan
/// is shorter than 180 deg plus the fan selected by `policy`.
RedundancyTable redundancy_weights(const SystemGeometry& geom, DetectorKind kind, Redundancy mode,
                                   ParkerPolicy policy = ParkerPolicy::PhysicalFan);
ProjectionStack apply_redundancy(const ProjectionStack& p, const RedundancyTable& table);

/// Spatial taps h(n) of the discrete ramp kernel for pixel pitch `pitch`.
double ramp_tap(int n, double pitch, FilterKind kind);

/// Filters each row of `rows` (row-major, n_cols per row) in place:
/// out = pitch * sum_k h(n - k) in(k), via zero-padded FFT of length >= 2 n_cols.
void ramp_filter_rows(std::span<float> rows, int n_cols, double pitch, FilterKind kind);

/// Row-wise ramp filtering with the pitch scaled to the isocenter.
ProjectionStack ramp_filter(const ProjectionStack& p, FilterKind kind);

/// Voxel-driven cone-beam backprojection of weighted, filtered projections:
/// value = d_beta * sum over views of (sid/U)^2 * detector sample.
Volume3D backproject(const ProjectionStack& p, const Grid& grid,
                     DetectorInterpolation interp = DetectorInterpolation::Bilinear);
Volume3D backproject(const ProjectionStack& p, const Grid& grid, DetectorInterpolation interp, simd::Isa isa);

/// Full FDK chain returning attenuation: completion (physical input only),
/// cosine weighting, redundancy weighting, ramp filtering, backprojection.
Volume3D reconstruct_attenuation(const ProjectionStack& p, const ReconOptions& opts);
/// reconstruct_attenuation followed by conversion to HU.
Volume3D reconstruct(const ProjectionStack& p, const ReconOptions& opts);
Volume3D reconstruct(const ProjectionStack& p, const SystemGeometry& geom, const ReconOptions& opts);

}  // namespace tcbct
