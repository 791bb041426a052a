#pragma once

#include <cstdint>

#include "tcbct/geometry.hpp"
#include "tcbct/phantom.hpp"
#include "tcbct/projection.hpp"
#include "tcbct/simd.hpp"
#include "tcbct/volume.hpp"

namespace tcbct {

/// Ray-driven projection of an attenuation volume: samples every step_mm
/// (default min(voxel)/2) along each pixel ray with trilinear interpolation,
/// zero outside the grid. Physical and virtual stacks share their central
/// columns bit for bit.
ProjectionStack forward_project(const Volume3D& mu, const SystemGeometry& geom, DetectorKind kind);
ProjectionStack forward_project(const Volume3D& mu, const SystemGeometry& geom, DetectorKind kind,
                                simd::Isa isa, double step_mm = 0.0);

/// Exact line integrals of a phantom: chord length times attenuation,
/// summed over primitives.
ProjectionStack analytic_project(const PhantomSpec& spec, const SystemGeometry& geom, DetectorKind kind,
                                 double mu_water = kDefaultMuWater);
double analytic_line_integral(const PhantomSpec& spec, const Ray& ray, double mu_water = kDefaultMuWater);

/// Simulates photon counting: N ~ Poisson(photons * exp(-p)) and returns
/// -ln(max(N, 1) / photons). Every pixel draws from its own stream keyed by
/// (seed, view, row, col), so the result is independent of thread count.
ProjectionStack add_poisson_noise(const ProjectionStack& p, double photons_per_ray, std::uint64_t seed);

/// Poisson draw used by add_poisson_noise: counting arrivals below a mean of
/// 1000, rounded normal approximation above. `stream` identifies the draw.
std::uint64_t sample_photon_count(double mean, std::uint64_t stream);
std::uint64_t pixel_stream(std::uint64_t seed, int view, int row, int col);

}  // namespace tcbct
