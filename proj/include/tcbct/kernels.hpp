#pragma once

#include <cstddef>
#include <cstdint>

#include "tcbct/simd.hpp"

// Inner loops of the forward projector and the backprojector. Each kernel has
// a scalar reference and an AVX2 variant that performs the same float
// operations in the same order per lane, so both produce identical results.
namespace tcbct::kernels {

/// Volume with one zero voxel of padding on every side; dims are padded dims.
struct PaddedVolume {
  const float* data = nullptr;
  int nx = 0;
  int ny = 0;
  int nz = 0;
};

/// Ray in padded index coordinates: sample k sits at q0 + k * dq, and samples
/// k_begin <= k < k_end contribute.
struct RaySegment {
  float q0[3];
  float dq[3];
  std::int32_t k_begin;
  std::int32_t k_end;
};

/// out[r] = step * sum_k trilinear(volume, q0 + k dq).
void march_rays_scalar(const PaddedVolume& vol, const RaySegment* rays, std::size_t n, float step, float* out);
void march_rays_avx2(const PaddedVolume& vol, const RaySegment* rays, std::size_t n, float step, float* out);

/// One filtered view with a zero column on the right and a zero row at the
/// bottom; stride = cols + 1.
struct PaddedView {
  const float* data = nullptr;
  int cols = 0;
  int rows = 0;
  int stride = 0;
};

/// Constants for accumulating one view into a row of voxels along x.
struct BackprojectRow {
  PaddedView view;
  float cos_b = 1.0f;
  float sin_b = 0.0f;
  float sid = 1.0f;
  float u_scale = 1.0f;    // sdd / pixel_w
  float v_scale = 1.0f;    // sdd / pixel_h
  float col_center = 0.0f; // (cols - 1) / 2
  float row_center = 0.0f; // (rows - 1) / 2
  float x0 = 0.0f;
  float dx = 1.0f;
  float y = 0.0f;
  float z = 0.0f;
  int nx = 0;
};

/// acc[i] += (sid/U)^2 * bilinear(view, u_i, v_i) for voxels projecting onto
/// the detector; others are left unchanged.
void backproject_row_scalar(const BackprojectRow& args, float* acc);
void backproject_row_avx2(const BackprojectRow& args, float* acc);

using MarchRaysFn = void (*)(const PaddedVolume&, const RaySegment*, std::size_t, float, float*);
using BackprojectRowFn = void (*)(const BackprojectRow&, float*);

MarchRaysFn march_rays_for(simd::Isa isa);
BackprojectRowFn backproject_row_for(simd::Isa isa);

}  // namespace tcbct::kernels
