#include <doctest.h>

#include <cstdlib>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "tcbct/fdk.hpp"
#include "tcbct/kernels.hpp"
#include "tcbct/projector.hpp"
#include "tcbct/simd.hpp"

using namespace tcbct;

namespace {

bool have_avx2() { return simd::detected_isa() == simd::Isa::Avx2; }

std::vector<kernels::RaySegment> random_rays(std::mt19937& rng, int n, int nx, int ny, int nz) {
  std::uniform_real_distribution<float> pos(-3.0f, static_cast<float>(std::max({nx, ny, nz})) + 3.0f);
  std::uniform_real_distribution<float> dir(-0.6f, 0.6f);
  std::uniform_int_distribution<int> begin(0, 20), length(0, 90);
  std::vector<kernels::RaySegment> rays(n);
  for (auto& r : rays) {
    for (int a = 0; a < 3; ++a) {
      r.q0[a] = pos(rng);
      r.dq[a] = dir(rng);
    }
    r.k_begin = begin(rng);
    r.k_end = r.k_begin + length(rng);
  }
  return rays;
}

}  // namespace

TEST_CASE("isa selection honours overrides") {
  simd::set_isa_override(simd::Isa::Scalar);
  CHECK(simd::active_isa() == simd::Isa::Scalar);
  simd::set_isa_override(std::nullopt);
  CHECK(simd::active_isa() == simd::detected_isa());
  CHECK(simd::to_string(simd::Isa::Avx2) == "avx2");
}

TEST_CASE("ray marching kernels agree exactly") {
  if (!have_avx2()) {
    MESSAGE("AVX2 not available; skipping");
    return;
  }
  std::mt19937 rng(1);
  const int nx = 19, ny = 23, nz = 11;
  std::vector<float> data(static_cast<std::size_t>(nx) * ny * nz);
  std::uniform_real_distribution<float> val(0.0f, 1.0f);
  for (auto& v : data) v = val(rng);
  const kernels::PaddedVolume vol{data.data(), nx, ny, nz};
  // Odd counts exercise the partial final batch.
  for (int n : {1, 7, 8, 9, 61}) {
    const auto rays = random_rays(rng, n, nx, ny, nz);
    std::vector<float> a(n), b(n);
    kernels::march_rays_scalar(vol, rays.data(), rays.size(), 0.37f, a.data());
    kernels::march_rays_avx2(vol, rays.data(), rays.size(), 0.37f, b.data());
    CHECK(a == b);
  }
}

TEST_CASE("backprojection row kernels agree exactly") {
  if (!have_avx2()) {
    MESSAGE("AVX2 not available; skipping");
    return;
  }
  std::mt19937 rng(2);
  const int cols = 37, rows = 9;
  std::vector<float> view(static_cast<std::size_t>(cols + 1) * (rows + 1), 0.0f);
  std::uniform_real_distribution<float> val(-1.0f, 1.0f);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) view[r * (cols + 1) + c] = val(rng);
  kernels::BackprojectRow args;
  args.view = {view.data(), cols, rows, cols + 1};
  args.sid = 600.0f;
  args.u_scale = 1100.0f / 8.0f;
  args.v_scale = 1100.0f / 8.0f;
  args.col_center = (cols - 1) * 0.5f;
  args.row_center = (rows - 1) * 0.5f;
  args.dx = 3.0f;
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_real_distribution<float> angle(0.0f, 6.2831853f), coord(-150.0f, 150.0f);
    const float b = angle(rng);
    args.cos_b = std::cos(b);
    args.sin_b = std::sin(b);
    args.x0 = coord(rng);
    args.y = coord(rng);
    args.z = coord(rng) * 0.2f;
    args.nx = 1 + trial % 29;
    std::vector<float> a(args.nx, 0.25f), c(args.nx, 0.25f);
    kernels::backproject_row_scalar(args, a.data());
    kernels::backproject_row_avx2(args, c.data());
    CHECK(a == c);
  }
}

TEST_CASE("forward projection and backprojection are identical across ISAs") {
  if (!have_avx2()) {
    MESSAGE("AVX2 not available; skipping");
    return;
  }
  const auto g = test::small_geometry();
  const Volume3D mu = test::random_volume(test::thin_grid(), 17);
  const auto ps = forward_project(mu, g, DetectorKind::Virtual, simd::Isa::Scalar);
  const auto pv = forward_project(mu, g, DetectorKind::Virtual, simd::Isa::Avx2);
  CHECK(ps == pv);
  const auto bs = backproject(ps, test::thin_grid(), DetectorInterpolation::Bilinear, simd::Isa::Scalar);
  const auto bv = backproject(ps, test::thin_grid(), DetectorInterpolation::Bilinear, simd::Isa::Avx2);
  CHECK(bs == bv);
}
