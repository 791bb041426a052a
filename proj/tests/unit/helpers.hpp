#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>

#include <unistd.h>

#include "tcbct/geometry.hpp"
#include "tcbct/volume.hpp"

namespace tcbct::test {

// Table 1 extent with 8x coarser pixels, 24 rows and a 2 degree step.
inline SystemGeometry::Params small_params() {
  SystemGeometry::Params p;
  p.det_cols = 63;
  p.virt_cols = 151;
  p.det_rows = 24;
  p.pixel_w_mm = 4.864;
  p.pixel_h_mm = 4.864;
  p.angular_step_deg = 2.0;
  return p;
}

inline SystemGeometry small_geometry() { return SystemGeometry(small_params()); }

// 64 x 64 x 4 voxels of 5 mm: the desk extent in x/y, a thin slab in z.
inline Grid thin_grid() { return {{64, 64, 4}, {5.0, 5.0, 5.0}, {0.0, 0.0, 0.0}}; }

inline Volume3D random_volume(const Grid& grid, std::uint32_t seed, float lo = 0.0f, float hi = 0.02f) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  Volume3D v(grid, Unit::Attenuation);
  for (auto& x : v.values()) x = dist(rng);
  return v;
}

inline double max_abs(std::span<const float> v) {
  double m = 0.0;
  for (float x : v) m = std::max(m, static_cast<double>(std::abs(x)));
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("tcbct_" + name + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace tcbct::test
