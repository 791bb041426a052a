#include <algorithm>
#include <cmath>

#include "tcbct/kernels.hpp"

namespace tcbct::kernels {

namespace {

inline float lerp(float a, float b, float t) { return a + t * (b - a); }

}  // namespace

void march_rays_scalar(const PaddedVolume& vol, const RaySegment* rays, std::size_t n, float step, float* out) {
  const float hi[3] = {static_cast<float>(vol.nx - 1), static_cast<float>(vol.ny - 1),
                       static_cast<float>(vol.nz - 1)};
  const int last[3] = {vol.nx - 2, vol.ny - 2, vol.nz - 2};
  const std::ptrdiff_t sy = vol.nx;
  const std::ptrdiff_t sz = static_cast<std::ptrdiff_t>(vol.nx) * vol.ny;

  for (std::size_t r = 0; r < n; ++r) {
    const RaySegment& ray = rays[r];
    float sum = 0.0f;
    for (std::int32_t k = ray.k_begin; k < ray.k_end; ++k) {
      const float kf = static_cast<float>(k);
      int i0[3];
      float f[3];
      for (int a = 0; a < 3; ++a) {
        float p = ray.q0[a] + kf * ray.dq[a];
        p = std::min(std::max(p, 0.0f), hi[a]);
        i0[a] = std::min(static_cast<int>(std::floor(p)), last[a]);
        f[a] = p - static_cast<float>(i0[a]);
      }
      const float* c = vol.data + i0[0] + i0[1] * sy + i0[2] * sz;
      const float c00 = lerp(c[0], c[1], f[0]);
      const float c10 = lerp(c[sy], c[sy + 1], f[0]);
      const float c01 = lerp(c[sz], c[sz + 1], f[0]);
      const float c11 = lerp(c[sz + sy], c[sz + sy + 1], f[0]);
      const float c0 = lerp(c00, c10, f[1]);
      const float c1 = lerp(c01, c11, f[1]);
      sum = sum + lerp(c0, c1, f[2]);
    }
    out[r] = sum * step;
  }
}

void backproject_row_scalar(const BackprojectRow& a, float* acc) {
  const float max_u = static_cast<float>(a.view.cols - 1);
  const float max_v = static_cast<float>(a.view.rows - 1);
  const float y_sin = a.y * a.sin_b;
  const float y_cos = a.y * a.cos_b;
  for (int i = 0; i < a.nx; ++i) {
    const float x = a.x0 + static_cast<float>(i) * a.dx;
    const float s = x * a.cos_b + y_sin;
    const float t = y_cos - x * a.sin_b;
    const float depth = a.sid - s;
    const float inv = 1.0f / depth;
    const float cu = t * inv * a.u_scale + a.col_center;
    const float cv = a.z * inv * a.v_scale + a.row_center;
    if (!(depth > 0.0f && cu >= 0.0f && cu <= max_u && cv >= 0.0f && cv <= max_v)) continue;
    const float fu_floor = std::floor(cu);
    const float fv_floor = std::floor(cv);
    const int iu = static_cast<int>(fu_floor);
    const int iv = static_cast<int>(fv_floor);
    const float fu = cu - fu_floor;
    const float fv = cv - fv_floor;
    const float* p = a.view.data + iv * a.view.stride + iu;
    const float top = lerp(p[0], p[1], fu);
    const float bottom = lerp(p[a.view.stride], p[a.view.stride + 1], fu);
    const float w = a.sid * inv;
    acc[i] = acc[i] + lerp(top, bottom, fv) * (w * w);
  }
}

}  // namespace tcbct::kernels
