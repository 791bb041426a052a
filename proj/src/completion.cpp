#include "tcbct/completion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "tcbct/error.hpp"
#include "tcbct/parallel.hpp"

namespace tcbct {

namespace {

void require_physical(const ProjectionStack& p, const char* what) {
  if (p.kind() != DetectorKind::Physical) throw Error(std::string(what) + ": input must be a physical stack");
}

void require_geometry(const ProjectionStack& p, const SystemGeometry& geom, const char* what) {
  if (!(p.geometry() == geom)) throw Error(std::string(what) + ": stack geometry does not match");
}

}  // namespace

WceSideResult wce_extrapolate_side(std::span<const float> measured, double pitch_mm, double mu,
                                   int cosine_fallback_width, std::span<float> out) {
  std::fill(out.begin(), out.end(), 0.0f);
  if (measured.empty() || out.empty()) return {};
  const double boundary = std::max(0.0f, measured[0]);
  if (boundary <= 0.0) return {};

  // Outward derivative at the boundary.
  double slope = 0.0;
  if (measured.size() >= 3) slope = (3.0 * measured[0] - 4.0 * measured[1] + measured[2]) / (2.0 * pitch_mm);
  else if (measured.size() == 2) slope = (measured[0] - measured[1]) / pitch_mm;

  if (slope < 0.0) {
    // Cylinder projection 2 mu sqrt(R^2 - s^2) with value and slope matched
    // at s = offset (the boundary column).
    const double offset = -boundary * slope / (4.0 * mu * mu);
    const double half_chord = boundary / (2.0 * mu);
    const double r2 = half_chord * half_chord + offset * offset;
    for (std::size_t j = 0; j < out.size(); ++j) {
      const double s = offset + static_cast<double>(j + 1) * pitch_mm;
      if (s * s >= r2) break;
      out[j] = static_cast<float>(2.0 * mu * std::sqrt(r2 - s * s));
    }
    return {WceFit::Cylinder, std::sqrt(r2), offset};
  }

  const int width = std::max(1, cosine_fallback_width);
  for (std::size_t j = 0; j + 1 < static_cast<std::size_t>(width) && j < out.size(); ++j)
    out[j] = static_cast<float>(boundary * 0.5 *
                                (1.0 + std::cos(std::numbers::pi * static_cast<double>(j + 1) / width)));
  return {WceFit::CosineFallback, 0.0, 0.0};
}

ProjectionStack wce_extrapolate(const ProjectionStack& p, const WceOptions& opts) {
  require_physical(p, "wce_extrapolate");
  if (!(opts.mu_water > 0.0)) throw Error("wce_extrapolate: mu_water must be positive");
  const auto& geom = p.geometry();
  ProjectionStack out(geom, DetectorKind::Virtual, p.noise_applied());
  const int n = p.n_cols();
  const int offset = geom.physical_column_offset();
  const int extra = offset;
  const double pitch = geom.params().pixel_w_mm * geom.sid_mm() / geom.sdd_mm();
  const int n_rows = p.n_rows();

  parallel_for(static_cast<std::size_t>(p.n_views()) * n_rows, [&](std::size_t task) {
    const int view = static_cast<int>(task / n_rows);
    const int row = static_cast<int>(task % n_rows);
    const auto src = p.row(view, row);
    auto dst = out.row(view, row);
    std::copy(src.begin(), src.end(), dst.begin() + offset);
    if (extra == 0) return;
    // Tilted rows cross a z-aligned cylinder on a longer path.
    const double v = geom.row_offset_mm(row);
    const double mu = opts.mu_water * std::sqrt(geom.sdd_mm() * geom.sdd_mm() + v * v) / geom.sdd_mm();
    const std::size_t depth = std::min<std::size_t>(3, src.size());

    std::vector<float> inward(depth), side(extra);
    for (std::size_t i = 0; i < depth; ++i) inward[i] = src[n - 1 - i];
    wce_extrapolate_side(inward, pitch, mu, opts.cosine_fallback_width, side);
    for (int j = 0; j < extra; ++j) dst[offset + n + j] = side[j];

    for (std::size_t i = 0; i < depth; ++i) inward[i] = src[i];
    wce_extrapolate_side(inward, pitch, mu, opts.cosine_fallback_width, side);
    for (int j = 0; j < extra; ++j) dst[offset - 1 - j] = side[j];
  });
  return out;
}

ProjectionStack wce_extrapolate(const ProjectionStack& p, const SystemGeometry& geom, const WceOptions& opts) {
  require_geometry(p, geom, "wce_extrapolate");
  return wce_extrapolate(p, opts);
}

ProjectionStack zero_extend(const ProjectionStack& p) {
  require_physical(p, "zero_extend");
  const auto& geom = p.geometry();
  ProjectionStack out(geom, DetectorKind::Virtual, p.noise_applied());
  const int offset = geom.physical_column_offset();
  for (int v = 0; v < p.n_views(); ++v)
    for (int r = 0; r < p.n_rows(); ++r) {
      const auto src = p.row(v, r);
      std::copy(src.begin(), src.end(), out.row(v, r).begin() + offset);
    }
  return out;
}

ProjectionStack zero_extend(const ProjectionStack& p, const SystemGeometry& geom) {
  require_geometry(p, geom, "zero_extend");
  return zero_extend(p);
}

}  // namespace tcbct
