#pragma once

#include <span>

#include "tcbct/projection.hpp"
#include "tcbct/volume.hpp"

namespace tcbct {

struct WceOptions {
  double mu_water = kDefaultMuWater;
  /// Columns over which the half-cosine fallback decays to zero.
  int cosine_fallback_width = 100;
};

/// How one side of a row was completed.
enum class WceFit { Empty, Cylinder, CosineFallback };

struct WceSideResult {
  WceFit fit = WceFit::Empty;
  double radius_mm = 0.0;   // fitted cylinder radius (isocenter scale)
  double offset_mm = 0.0;   // distance from the cylinder axis to the boundary column
};

/// Water-cylinder completion of one side. `measured` lists the measured
/// samples ordered from the boundary inwards (measured[0] is the last
/// measured column); `out` receives the extrapolated samples ordered
/// outwards (out[j] lies j + 1 columns beyond the boundary). pitch_mm is the
/// column spacing at isocenter scale and mu the attenuation of the fitted
/// cylinder along this row. When the boundary slope does not point outwards
/// the row decays to zero over cosine_fallback_width columns instead.
WceSideResult wce_extrapolate_side(std::span<const float> measured, double pitch_mm, double mu,
                                   int cosine_fallback_width, std::span<float> out);

/// Completes a physical stack onto the virtual detector: measured columns are
/// copied unchanged and both sides of every row are filled with the
/// projection of a water cylinder matching the boundary value and slope.
ProjectionStack wce_extrapolate(const ProjectionStack& p, const WceOptions& opts = {});
/// As above; throws unless the stack was acquired with `geom`.
ProjectionStack wce_extrapolate(const ProjectionStack& p, const SystemGeometry& geom, const WceOptions& opts = {});

/// Copies the measured columns into the virtual width and zero-fills the rest.
ProjectionStack zero_extend(const ProjectionStack& p);
ProjectionStack zero_extend(const ProjectionStack& p, const SystemGeometry& geom);

}  // namespace tcbct
