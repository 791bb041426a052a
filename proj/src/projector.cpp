#include "tcbct/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "tcbct/error.hpp"
#include "tcbct/kernels.hpp"
#include "tcbct/parallel.hpp"

namespace tcbct {

namespace {

std::vector<float> pad_volume(const Volume3D& vol) {
  const auto& d = vol.grid().dims;
  const std::size_t px = d[0] + 2, py = d[1] + 2, pz = d[2] + 2;
  std::vector<float> padded(px * py * pz, 0.0f);
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j) {
      const auto src = vol.values().subspan(vol.grid().index(0, j, k), d[0]);
      std::copy(src.begin(), src.end(), padded.begin() + ((k + 1) * py + (j + 1)) * px + 1);
    }
  return padded;
}

void check_frame(const Grid& grid, const SystemGeometry& geom) {
  // Every corner of the padded grid must stay inside the source circle.
  double max_r2 = 0.0;
  for (int cx = 0; cx < 2; ++cx)
    for (int cy = 0; cy < 2; ++cy) {
      const double x = grid.offset_mm[0] + (cx ? 1 : -1) * (grid.dims[0] + 1) * 0.5 * grid.voxel_mm[0];
      const double y = grid.offset_mm[1] + (cy ? 1 : -1) * (grid.dims[1] + 1) * 0.5 * grid.voxel_mm[1];
      max_r2 = std::max(max_r2, x * x + y * y);
    }
  if (std::sqrt(max_r2) >= geom.sid_mm())
    throw Error("forward_project: volume reaches the source trajectory (geometry/volume frame mismatch)");
}

// splitmix64 finaliser; used to derive independent per-pixel streams.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class PixelRng {
 public:
  explicit PixelRng(std::uint64_t stream) : state_(stream) {}
  // Uniform on (0, 1].
  double uniform() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return (static_cast<double>(z >> 11) + 1.0) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

constexpr double kCountingLimit = 1000.0;

}  // namespace

ProjectionStack forward_project(const Volume3D& mu, const SystemGeometry& geom, DetectorKind kind) {
  return forward_project(mu, geom, kind, simd::active_isa());
}

ProjectionStack forward_project(const Volume3D& mu, const SystemGeometry& geom, DetectorKind kind,
                                simd::Isa isa, double step_mm) {
  if (mu.unit() != Unit::Attenuation) throw Error("forward_project: volume must be attenuation");
  const Grid& grid = mu.grid();
  check_frame(grid, geom);
  const double step = step_mm > 0.0 ? step_mm : 0.5 * std::min({grid.voxel_mm[0], grid.voxel_mm[1], grid.voxel_mm[2]});

  const std::vector<float> padded = pad_volume(mu);
  const kernels::PaddedVolume pv{padded.data(), grid.dims[0] + 2, grid.dims[1] + 2, grid.dims[2] + 2};
  const auto march = kernels::march_rays_for(isa);

  // World position of padded index 0 and the box that the padding covers.
  double origin[3], lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    origin[a] = grid.center_coord(a, 0) - grid.voxel_mm[a];
    lo[a] = origin[a];
    hi[a] = origin[a] + (grid.dims[a] + 1) * grid.voxel_mm[a];
  }

  ProjectionStack out(geom, kind);
  const int n_cols = out.n_cols();
  const int n_rows = out.n_rows();
  parallel_for(static_cast<std::size_t>(out.n_views()) * n_rows, [&](std::size_t task) {
    const int view = static_cast<int>(task / n_rows);
    const int row = static_cast<int>(task % n_rows);
    const double beta = geom.view_angle_rad(view);
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double v = geom.row_offset_mm(row);
    std::vector<kernels::RaySegment> rays(n_cols);
    for (int col = 0; col < n_cols; ++col) {
      const Ray ray = geom.ray_for_offsets(cb, sb, geom.column_offset_mm(col, kind), v);
      const double o[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
      const double d[3] = {ray.direction.x, ray.direction.y, ray.direction.z};
      double t_in = 0.0, t_out = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
          if (o[a] < lo[a] || o[a] > hi[a]) t_out = -1.0;
          continue;
        }
        const double t1 = (lo[a] - o[a]) / d[a];
        const double t2 = (hi[a] - o[a]) / d[a];
        t_in = std::max(t_in, std::min(t1, t2));
        t_out = std::min(t_out, std::max(t1, t2));
      }
      auto& seg = rays[col];
      for (int a = 0; a < 3; ++a) {
        seg.q0[a] = static_cast<float>((o[a] - origin[a]) / grid.voxel_mm[a]);
        seg.dq[a] = static_cast<float>(d[a] * step / grid.voxel_mm[a]);
      }
      if (t_out > t_in) {
        seg.k_begin = static_cast<std::int32_t>(std::ceil(t_in / step));
        seg.k_end = static_cast<std::int32_t>(std::floor(t_out / step)) + 1;
        if (seg.k_end < seg.k_begin) seg.k_end = seg.k_begin;
      } else {
        seg.k_begin = seg.k_end = 0;
      }
    }
    march(pv, rays.data(), rays.size(), static_cast<float>(step), out.row(view, row).data());
  });
  return out;
}

double analytic_line_integral(const PhantomSpec& spec, const Ray& ray, double mu_water) {
  double sum = 0.0;
  for (const auto& p : spec.primitives) sum += chord_length(p, ray) * mu_water * primitive_value_hu(p) / 1000.0;
  return sum;
}

ProjectionStack analytic_project(const PhantomSpec& spec, const SystemGeometry& geom, DetectorKind kind,
                                 double mu_water) {
  ProjectionStack out(geom, kind);
  const int n_rows = out.n_rows();
  parallel_for(static_cast<std::size_t>(out.n_views()) * n_rows, [&](std::size_t task) {
    const int view = static_cast<int>(task / n_rows);
    const int row = static_cast<int>(task % n_rows);
    const double beta = geom.view_angle_rad(view);
    const double cb = std::cos(beta), sb = std::sin(beta);
    auto dst = out.row(view, row);
    for (int col = 0; col < out.n_cols(); ++col) {
      const Ray ray = geom.ray_for_offsets(cb, sb, geom.column_offset_mm(col, kind), geom.row_offset_mm(row));
      dst[col] = static_cast<float>(analytic_line_integral(spec, ray, mu_water));
    }
  });
  return out;
}

std::uint64_t pixel_stream(std::uint64_t seed, int view, int row, int col) {
  std::uint64_t h = mix(seed);
  h = mix(h ^ static_cast<std::uint64_t>(view));
  h = mix(h ^ static_cast<std::uint64_t>(row));
  return mix(h ^ static_cast<std::uint64_t>(col));
}

std::uint64_t sample_photon_count(double mean, std::uint64_t stream) {
  PixelRng rng(stream);
  if (!(mean > 0.0)) return 0;
  if (mean <= kCountingLimit) {
    // Arrivals of a unit-rate Poisson process inside [0, mean].
    std::uint64_t count = 0;
    double elapsed = -std::log(rng.uniform());
    while (elapsed <= mean) {
      ++count;
      elapsed -= std::log(rng.uniform());
    }
    return count;
  }
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return static_cast<std::uint64_t>(std::max(0.0, std::round(mean + std::sqrt(mean) * z)));
}

ProjectionStack add_poisson_noise(const ProjectionStack& p, double photons_per_ray, std::uint64_t seed) {
  if (p.noise_applied()) throw Error("add_poisson_noise: stack already carries noise");
  if (!(photons_per_ray >= 1.0)) throw Error("add_poisson_noise: photons_per_ray must be >= 1");
  ProjectionStack out(p.geometry(), p.kind(), true);
  const int n_rows = p.n_rows();
  parallel_for(static_cast<std::size_t>(p.n_views()) * n_rows, [&](std::size_t task) {
    const int view = static_cast<int>(task / n_rows);
    const int row = static_cast<int>(task % n_rows);
    const auto src = p.row(view, row);
    auto dst = out.row(view, row);
    for (int col = 0; col < p.n_cols(); ++col) {
      const double mean = photons_per_ray * std::exp(-static_cast<double>(src[col]));
      const auto n = sample_photon_count(mean, pixel_stream(seed, view, row, col));
      dst[col] = static_cast<float>(-std::log(static_cast<double>(std::max<std::uint64_t>(n, 1)) / photons_per_ray));
    }
  });
  return out;
}

}  // namespace tcbct
