#include <immintrin.h>

#include <algorithm>
#include <cstdint>
#include <cstring>

#include "tcbct/kernels.hpp"

// Compiled with -mavx2 only (no FMA) so every lane matches the scalar kernel.
namespace tcbct::kernels {

namespace {

inline __m256 lerp8(__m256 a, __m256 b, __m256 t) { return _mm256_add_ps(a, _mm256_mul_ps(t, _mm256_sub_ps(b, a))); }

inline __m256 gather(const float* base, __m256i idx) { return _mm256_i32gather_ps(base, idx, 4); }

void march8(const PaddedVolume& vol, const RaySegment* rays, int lanes, float step, float* out) {
  alignas(32) float q0[3][8], dq[3][8];
  alignas(32) std::int32_t kb[8], ke[8];
  for (int l = 0; l < 8; ++l) {
    const RaySegment& r = rays[std::min(l, lanes - 1)];
    for (int a = 0; a < 3; ++a) {
      q0[a][l] = r.q0[a];
      dq[a][l] = r.dq[a];
    }
    kb[l] = l < lanes ? r.k_begin : 0;
    ke[l] = l < lanes ? r.k_end : 0;
  }
  std::int32_t kmin = INT32_MAX;
  std::int32_t kmax = INT32_MIN;
  for (int l = 0; l < 8; ++l) {
    if (ke[l] <= kb[l]) continue;
    kmin = std::min(kmin, kb[l]);
    kmax = std::max(kmax, ke[l]);
  }

  __m256 sum = _mm256_setzero_ps();
  if (kmax > kmin) {
    const __m256 vq0[3] = {_mm256_load_ps(q0[0]), _mm256_load_ps(q0[1]), _mm256_load_ps(q0[2])};
    const __m256 vdq[3] = {_mm256_load_ps(dq[0]), _mm256_load_ps(dq[1]), _mm256_load_ps(dq[2])};
    const __m256 hi[3] = {_mm256_set1_ps(static_cast<float>(vol.nx - 1)),
                          _mm256_set1_ps(static_cast<float>(vol.ny - 1)),
                          _mm256_set1_ps(static_cast<float>(vol.nz - 1))};
    const __m256i last[3] = {_mm256_set1_epi32(vol.nx - 2), _mm256_set1_epi32(vol.ny - 2),
                             _mm256_set1_epi32(vol.nz - 2)};
    const __m256i vkb = _mm256_load_si256(reinterpret_cast<const __m256i*>(kb));
    const __m256i vke = _mm256_load_si256(reinterpret_cast<const __m256i*>(ke));
    const __m256i sy = _mm256_set1_epi32(vol.nx);
    const __m256i sz = _mm256_set1_epi32(vol.nx * vol.ny);
    const __m256i one = _mm256_set1_epi32(1);
    const __m256 zero = _mm256_setzero_ps();

    for (std::int32_t k = kmin; k < kmax; ++k) {
      const __m256i vk = _mm256_set1_epi32(k);
      const __m256i active = _mm256_andnot_si256(_mm256_cmpgt_epi32(vkb, vk), _mm256_cmpgt_epi32(vke, vk));
      const __m256 kf = _mm256_set1_ps(static_cast<float>(k));
      __m256i i0[3];
      __m256 f[3];
      for (int a = 0; a < 3; ++a) {
        __m256 p = _mm256_add_ps(vq0[a], _mm256_mul_ps(kf, vdq[a]));
        p = _mm256_min_ps(_mm256_max_ps(p, zero), hi[a]);
        i0[a] = _mm256_min_epi32(_mm256_cvttps_epi32(_mm256_floor_ps(p)), last[a]);
        f[a] = _mm256_sub_ps(p, _mm256_cvtepi32_ps(i0[a]));
      }
      const __m256i base = _mm256_add_epi32(
          i0[0], _mm256_add_epi32(_mm256_mullo_epi32(i0[1], sy), _mm256_mullo_epi32(i0[2], sz)));
      const __m256i b_y = _mm256_add_epi32(base, sy);
      const __m256i b_z = _mm256_add_epi32(base, sz);
      const __m256i b_yz = _mm256_add_epi32(b_y, sz);
      const __m256 c00 = lerp8(gather(vol.data, base), gather(vol.data, _mm256_add_epi32(base, one)), f[0]);
      const __m256 c10 = lerp8(gather(vol.data, b_y), gather(vol.data, _mm256_add_epi32(b_y, one)), f[0]);
      const __m256 c01 = lerp8(gather(vol.data, b_z), gather(vol.data, _mm256_add_epi32(b_z, one)), f[0]);
      const __m256 c11 = lerp8(gather(vol.data, b_yz), gather(vol.data, _mm256_add_epi32(b_yz, one)), f[0]);
      const __m256 c0 = lerp8(c00, c10, f[1]);
      const __m256 c1 = lerp8(c01, c11, f[1]);
      const __m256 value = lerp8(c0, c1, f[2]);
      sum = _mm256_add_ps(sum, _mm256_and_ps(value, _mm256_castsi256_ps(active)));
    }
  }
  alignas(32) float result[8];
  _mm256_store_ps(result, _mm256_mul_ps(sum, _mm256_set1_ps(step)));
  std::memcpy(out, result, sizeof(float) * static_cast<std::size_t>(lanes));
}

}  // namespace

void march_rays_avx2(const PaddedVolume& vol, const RaySegment* rays, std::size_t n, float step, float* out) {
  for (std::size_t r = 0; r < n; r += 8) {
    const int lanes = static_cast<int>(std::min<std::size_t>(8, n - r));
    march8(vol, rays + r, lanes, step, out + r);
  }
}

void backproject_row_avx2(const BackprojectRow& a, float* acc) {
  const __m256 cos_b = _mm256_set1_ps(a.cos_b);
  const __m256 sin_b = _mm256_set1_ps(a.sin_b);
  const __m256 sid = _mm256_set1_ps(a.sid);
  const __m256 u_scale = _mm256_set1_ps(a.u_scale);
  const __m256 v_scale = _mm256_set1_ps(a.v_scale);
  const __m256 col_center = _mm256_set1_ps(a.col_center);
  const __m256 row_center = _mm256_set1_ps(a.row_center);
  const __m256 x0 = _mm256_set1_ps(a.x0);
  const __m256 dx = _mm256_set1_ps(a.dx);
  const __m256 z = _mm256_set1_ps(a.z);
  const __m256 y_sin = _mm256_set1_ps(a.y * a.sin_b);
  const __m256 y_cos = _mm256_set1_ps(a.y * a.cos_b);
  const __m256 max_u = _mm256_set1_ps(static_cast<float>(a.view.cols - 1));
  const __m256 max_v = _mm256_set1_ps(static_cast<float>(a.view.rows - 1));
  const __m256 zero = _mm256_setzero_ps();
  const __m256 one_f = _mm256_set1_ps(1.0f);
  const __m256i stride = _mm256_set1_epi32(a.view.stride);
  const __m256i one = _mm256_set1_epi32(1);
  const __m256 lane = _mm256_setr_ps(0, 1, 2, 3, 4, 5, 6, 7);

  for (int i = 0; i < a.nx; i += 8) {
    const int lanes = std::min(8, a.nx - i);
    const __m256 idx = _mm256_add_ps(_mm256_set1_ps(static_cast<float>(i)), lane);
    const __m256 x = _mm256_add_ps(x0, _mm256_mul_ps(idx, dx));
    const __m256 s = _mm256_add_ps(_mm256_mul_ps(x, cos_b), y_sin);
    const __m256 t = _mm256_sub_ps(y_cos, _mm256_mul_ps(x, sin_b));
    const __m256 depth = _mm256_sub_ps(sid, s);
    const __m256 inv = _mm256_div_ps(one_f, depth);
    const __m256 cu = _mm256_add_ps(_mm256_mul_ps(_mm256_mul_ps(t, inv), u_scale), col_center);
    const __m256 cv = _mm256_add_ps(_mm256_mul_ps(_mm256_mul_ps(z, inv), v_scale), row_center);
    __m256 valid = _mm256_and_ps(_mm256_cmp_ps(depth, zero, _CMP_GT_OQ), _mm256_cmp_ps(cu, zero, _CMP_GE_OQ));
    valid = _mm256_and_ps(valid, _mm256_cmp_ps(cu, max_u, _CMP_LE_OQ));
    valid = _mm256_and_ps(valid, _mm256_cmp_ps(cv, zero, _CMP_GE_OQ));
    valid = _mm256_and_ps(valid, _mm256_cmp_ps(cv, max_v, _CMP_LE_OQ));
    if (_mm256_movemask_ps(valid) == 0) continue;

    const __m256 fu_floor = _mm256_floor_ps(cu);
    const __m256 fv_floor = _mm256_floor_ps(cv);
    const __m256 fu = _mm256_sub_ps(cu, fu_floor);
    const __m256 fv = _mm256_sub_ps(cv, fv_floor);
    const __m256i iu = _mm256_cvttps_epi32(_mm256_and_ps(fu_floor, valid));
    const __m256i iv = _mm256_cvttps_epi32(_mm256_and_ps(fv_floor, valid));
    const __m256i base = _mm256_add_epi32(_mm256_mullo_epi32(iv, stride), iu);
    const __m256i below = _mm256_add_epi32(base, stride);
    const __m256 top = lerp8(gather(a.view.data, base), gather(a.view.data, _mm256_add_epi32(base, one)), fu);
    const __m256 bottom = lerp8(gather(a.view.data, below), gather(a.view.data, _mm256_add_epi32(below, one)), fu);
    const __m256 w = _mm256_mul_ps(sid, inv);
    const __m256 contrib = _mm256_and_ps(_mm256_mul_ps(lerp8(top, bottom, fv), _mm256_mul_ps(w, w)), valid);

    if (lanes == 8) {
      _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), contrib));
    } else {
      alignas(32) float tmp[8];
      alignas(32) float add[8];
      std::memcpy(tmp, acc + i, sizeof(float) * static_cast<std::size_t>(lanes));
      _mm256_store_ps(add, contrib);
      for (int l = 0; l < lanes; ++l) acc[i + l] = tmp[l] + add[l];
    }
  }
}

}  // namespace tcbct::kernels
