#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "tcbct/completion.hpp"
#include "tcbct/error.hpp"
#include "tcbct/phantom.hpp"
#include "tcbct/projector.hpp"

using namespace tcbct;

namespace {

double cylinder_profile(double mu, double r, double s) { return s * s < r * r ? 2.0 * mu * std::sqrt(r * r - s * s) : 0.0; }

ProjectionStack cylinder_stack(double radius, DetectorKind kind) {
  return analytic_project(water_cylinder_phantom(radius, 2000.0), test::small_geometry(), kind);
}

}  // namespace

TEST_CASE("side fit recovers an exact cylinder profile") {
  const double mu = 0.02, r = 100.0, pitch = 1.0, s_b = 60.0;
  std::vector<float> measured(3);
  for (int i = 0; i < 3; ++i) measured[i] = static_cast<float>(cylinder_profile(mu, r, s_b - i * pitch));
  std::vector<float> out(60);
  const WceSideResult fit = wce_extrapolate_side(measured, pitch, mu, 100, out);
  CHECK(fit.fit == WceFit::Cylinder);
  CHECK(fit.radius_mm == doctest::Approx(r).epsilon(1e-3));
  CHECK(fit.offset_mm == doctest::Approx(s_b).epsilon(1e-3));
  double sum2 = 0.0, worst = 0.0;
  for (int j = 0; j < 60; ++j) {
    const double err = std::abs(out[j] - cylinder_profile(mu, r, s_b + (j + 1) * pitch));
    sum2 += err * err;
    worst = std::max(worst, err);
  }
  // The fitted edge sits within a fraction of a millimetre of the true one,
  // where the profile has an infinite slope.
  CHECK(std::sqrt(sum2 / 60) <= 5e-3 * measured[0]);
  CHECK(worst <= 2e-2 * measured[0]);
}

TEST_CASE("inward slope falls back to a half-cosine decay") {
  // Values fall towards the centre, so the slope points inwards.
  std::vector<float> out(150);
  const WceSideResult fit = wce_extrapolate_side(std::vector<float>{1.0f, 0.9f, 0.8f}, 1.0, 0.02, 100, out);
  CHECK(fit.fit == WceFit::CosineFallback);
  CHECK(out[0] < 1.0f);
  CHECK(out[0] > 0.99f);
  for (int j = 1; j < 99; ++j) CHECK(out[j] < out[j - 1]);
  CHECK(out[49] == doctest::Approx(0.5));
  for (int j = 99; j < 150; ++j) CHECK(out[j] == 0.0f);
}

TEST_CASE("empty or non-positive boundaries extrapolate to zero") {
  std::vector<float> out(10, 7.0f);
  CHECK(wce_extrapolate_side(std::vector<float>{0.0f, 0.5f, 1.0f}, 1.0, 0.02, 100, out).fit == WceFit::Empty);
  CHECK(test::max_abs(out) == 0.0);
  // Noise can push the boundary below zero; it is clamped for fitting.
  CHECK(wce_extrapolate_side(std::vector<float>{-0.01f, 0.5f, 1.0f}, 1.0, 0.02, 100, out).fit == WceFit::Empty);
  CHECK(test::max_abs(out) == 0.0);
}

TEST_CASE("measured columns are copied unchanged") {
  const auto g = test::small_geometry();
  const ProjectionStack p = forward_project(test::random_volume(test::thin_grid(), 4), g, DetectorKind::Physical);
  for (const ProjectionStack& q : {wce_extrapolate(p), zero_extend(p)}) {
    CHECK(q.kind() == DetectorKind::Virtual);
    CHECK(crop_to_physical(q) == p);
  }
  const ProjectionStack noisy = add_poisson_noise(p, 1e5, 3);
  CHECK(wce_extrapolate(noisy).noise_applied());
  CHECK(crop_to_physical(wce_extrapolate(noisy)) == noisy);
}

TEST_CASE("extrapolation is continuous at both boundaries") {
  const auto g = test::small_geometry();
  const ProjectionStack p = crop_to_physical(cylinder_stack(120.0, DetectorKind::Virtual));
  const ProjectionStack q = wce_extrapolate(p);
  const int off = g.physical_column_offset(), n = p.n_cols();
  for (int v = 0; v < p.n_views(); ++v)
    for (int r = 0; r < p.n_rows(); ++r) {
      const auto row = q.row(v, r);
      // Jump across the boundary is no larger than a measured step.
      const double right_step = std::abs(row[off + n - 1] - row[off + n - 2]);
      const double left_step = std::abs(row[off] - row[off + 1]);
      CHECK(std::abs(row[off + n] - row[off + n - 1]) <= 1.5 * right_step + 1e-3 * row[off + n - 1] + 1e-6);
      CHECK(std::abs(row[off - 1] - row[off]) <= 1.5 * left_step + 1e-3 * row[off] + 1e-6);
    }
}

TEST_CASE("extrapolated slope matches the measured boundary slope") {
  const auto g = test::small_geometry();
  const ProjectionStack p = crop_to_physical(cylinder_stack(120.0, DetectorKind::Virtual));
  const ProjectionStack q = wce_extrapolate(p);
  const int off = g.physical_column_offset(), n = p.n_cols();
  const int r = p.n_rows() / 2;
  for (int v = 0; v < p.n_views(); v += 7) {
    const auto row = q.row(v, r);
    // One-sided differences at the last measured column, inwards and outwards.
    const double measured = (3.0 * row[off + n - 1] - 4.0 * row[off + n - 2] + row[off + n - 3]) / 2.0;
    const double extrapolated = (-3.0 * row[off + n - 1] + 4.0 * row[off + n] - row[off + n + 1]) / 2.0;
    CHECK(extrapolated == doctest::Approx(measured).epsilon(0.05));
  }
}

TEST_CASE("water cylinder beyond the FOV is completed closely") {
  const ProjectionStack truth = cylinder_stack(120.0, DetectorKind::Virtual);
  const ProjectionStack q = wce_extrapolate(crop_to_physical(truth));
  const auto& g = truth.geometry();
  const int off = g.physical_column_offset(), n = g.cols(DetectorKind::Physical);
  double num = 0.0, den = 0.0;
  for (int v = 0; v < truth.n_views(); ++v)
    for (int r = 0; r < truth.n_rows(); ++r)
      for (int c = 0; c < truth.n_cols(); ++c) {
        if (c >= off && c < off + n) continue;
        const double t = truth.at(v, r, c);
        if (t <= 0.0) continue;
        num += (q.at(v, r, c) - t) * (q.at(v, r, c) - t);
        den += t * t;
      }
  CHECK(std::sqrt(num / den) <= 0.10);
}

TEST_CASE("objects inside the FOV extrapolate to about zero") {
  const ProjectionStack p = crop_to_physical(cylinder_stack(50.0, DetectorKind::Virtual));
  const ProjectionStack q = wce_extrapolate(p);
  const auto& g = p.geometry();
  const int off = g.physical_column_offset(), n = p.n_cols();
  double outside = 0.0;
  for (int v = 0; v < q.n_views(); ++v)
    for (int r = 0; r < q.n_rows(); ++r)
      for (int c = 0; c < q.n_cols(); ++c)
        if (c < off || c >= off + n) outside = std::max(outside, static_cast<double>(std::abs(q.at(v, r, c))));
  CHECK(outside <= 1e-6);
}

TEST_CASE("zero extension fills with zeros and is additive") {
  const auto g = test::small_geometry();
  const ProjectionStack a = forward_project(test::random_volume(test::thin_grid(), 1), g, DetectorKind::Physical);
  const ProjectionStack b = forward_project(test::random_volume(test::thin_grid(), 2), g, DetectorKind::Physical);
  ProjectionStack sum = a;
  for (std::size_t i = 0; i < sum.values().size(); ++i) sum.values()[i] += b.values()[i];
  const ProjectionStack za = zero_extend(a), zb = zero_extend(b), zs = zero_extend(sum);
  for (std::size_t i = 0; i < zs.values().size(); ++i) CHECK(zs.values()[i] == za.values()[i] + zb.values()[i]);
  const int off = g.physical_column_offset();
  CHECK(za.at(3, 2, off - 1) == 0.0f);
  CHECK(za.at(3, 2, off + a.n_cols()) == 0.0f);
  CHECK(za.at(3, 2, off) == a.at(3, 2, 0));
}

TEST_CASE("completion preconditions") {
  const auto g = test::small_geometry();
  const ProjectionStack virt(g, DetectorKind::Virtual);
  const ProjectionStack phys(g, DetectorKind::Physical);
  CHECK_THROWS_AS(wce_extrapolate(virt), Error);
  CHECK_THROWS_AS(zero_extend(virt), Error);
  CHECK_THROWS_AS(wce_extrapolate(phys, WceOptions{0.0, 100}), Error);
  const SystemGeometry other(SystemGeometry::desk());
  CHECK_THROWS_AS(wce_extrapolate(phys, other), Error);
  CHECK_THROWS_AS(zero_extend(phys, other), Error);
  CHECK_NOTHROW(zero_extend(phys, g));
}
