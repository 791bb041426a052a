#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "tcbct/error.hpp"
#include "tcbct/volume.hpp"

using namespace tcbct;

namespace {

const Grid kGrid{{5, 4, 3}, {1.0, 2.0, 0.5}, {0.0, 0.0, 0.0}};

Volume3D ramp_hu() {
  Volume3D v(kGrid, Unit::HU);
  for (std::size_t i = 0; i < v.values().size(); ++i) v.values()[i] = -1200.0f + 37.0f * static_cast<float>(i);
  return v;
}

MaskVolume checker() {
  MaskVolume m(kGrid);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 5; ++i) m.set(i, j, k, (i + j + k) % 2 == 0);
  return m;
}

}  // namespace

TEST_CASE("grid indexing is x fastest and centred") {
  CHECK(kGrid.size() == 60);
  CHECK(kGrid.index(1, 0, 0) == 1);
  CHECK(kGrid.index(0, 1, 0) == 5);
  CHECK(kGrid.index(0, 0, 1) == 20);
  CHECK(kGrid.center_coord(0, 2) == 0.0);
  CHECK(kGrid.center_coord(1, 0) == doctest::Approx(-3.0));
  Grid shifted = kGrid;
  shifted.offset_mm = {10, 0, 0};
  CHECK(shifted.voxel_center(2, 0, 0).x == 10.0);
  CHECK(grid_from_json(grid_to_json(shifted)) == shifted);
  CHECK_THROWS_AS(grid_from_json({{"dims", {0, 1, 1}}, {"voxel_mm", {1, 1, 1}}}), Error);
  CHECK_THROWS_AS(grid_from_json({{"dims", {1, 1, 1}}}), Error);
}

TEST_CASE("HU and attenuation conversions") {
  Volume3D hu(kGrid, Unit::HU);
  hu.values()[0] = -1000.0f;
  hu.values()[1] = 0.0f;
  hu.values()[2] = 1000.0f;
  hu.values()[3] = -1500.0f;
  const Volume3D mu = hu_to_mu(hu, 0.02);
  CHECK(mu.unit() == Unit::Attenuation);
  CHECK(mu.values()[0] == 0.0f);
  CHECK(mu.values()[1] == doctest::Approx(0.02));
  CHECK(mu.values()[2] == doctest::Approx(0.04));
  CHECK(mu.values()[3] == 0.0f);  // clamped
  const Volume3D back = mu_to_hu(mu, 0.02);
  CHECK(back.values()[1] == doctest::Approx(0.0).epsilon(1e-4));
  CHECK(back.values()[2] == doctest::Approx(1000.0).epsilon(1e-6));
  CHECK_THROWS_AS(hu_to_mu(mu), Error);
  CHECK_THROWS_AS(mu_to_hu(hu), Error);
}

TEST_CASE("HU round trip above air") {
  Volume3D hu = ramp_hu();
  for (auto& x : hu.values()) x = std::max(x, -1000.0f);
  const Volume3D back = mu_to_hu(hu_to_mu(hu));
  for (std::size_t i = 0; i < hu.values().size(); ++i)
    CHECK(back.values()[i] == doctest::Approx(hu.values()[i]).epsilon(1e-5).scale(1000.0));
}

TEST_CASE("split_by_mask is an exact partition") {
  const Volume3D mu = hu_to_mu(ramp_hu());
  const MaskVolume m = checker();
  const auto [soi, others] = split_by_mask(mu, m);
  for (std::size_t i = 0; i < mu.values().size(); ++i) {
    CHECK(soi.values()[i] + others.values()[i] == mu.values()[i]);
    CHECK((m.values()[i] ? others.values()[i] : soi.values()[i]) == 0.0f);
  }
  const auto [none, all] = split_by_mask(mu, MaskVolume(kGrid));
  CHECK(all == mu);
  CHECK(test::max_abs(none.values()) == 0.0);

  CHECK_THROWS_AS(split_by_mask(ramp_hu(), m), Error);
  Grid other = kGrid;
  other.dims = {5, 4, 2};
  CHECK_THROWS_AS(split_by_mask(mu, MaskVolume(other)), Error);
}

TEST_CASE("mask algebra and threshold segmentation") {
  const MaskVolume m = checker();
  CHECK(m.count() == 30);
  CHECK(m.complement().count() == 30);
  CHECK((m & m.complement()).count() == 0);
  CHECK((m & m) == m);

  const MaskVolume seg = threshold_segment(ramp_hu(), 150.0);
  for (std::size_t i = 0; i < seg.values().size(); ++i)
    CHECK(seg.values()[i] == (ramp_hu().values()[i] >= 150.0f ? 1 : 0));
  CHECK_THROWS_AS(threshold_segment(hu_to_mu(ramp_hu()), 150.0), Error);
  CHECK_THROWS_AS(MaskVolume(kGrid, std::vector<std::uint8_t>(60, 2)), Error);
}

TEST_CASE("volume and mask files round-trip") {
  test::TempDir dir("volume_io");
  const Volume3D v = ramp_hu();
  save_volume(v, dir.path() / "v.raw");
  CHECK(std::filesystem::file_size(dir.path() / "v.raw") == 60 * sizeof(float));
  CHECK(std::filesystem::exists(dir.path() / "v.raw.json"));
  CHECK(load_volume(dir.path() / "v.raw") == v);

  const MaskVolume m = checker();
  save_mask(m, dir.path() / "m.raw");
  CHECK(load_mask(dir.path() / "m.raw") == m);
  // A volume with non-binary values is not a mask.
  CHECK_THROWS_AS(load_mask(dir.path() / "v.raw"), Error);
}

TEST_CASE("corrupt volume files are rejected") {
  test::TempDir dir("volume_bad");
  save_volume(ramp_hu(), dir.path() / "v.raw");
  SUBCASE("truncated payload") {
    std::filesystem::resize_file(dir.path() / "v.raw", 100);
    CHECK_THROWS_WITH_AS(load_volume(dir.path() / "v.raw"), doctest::Contains("size mismatch"), Error);
  }
  SUBCASE("garbage sidecar") {
    std::ofstream(dir.path() / "v.raw.json") << "{ not json";
    CHECK_THROWS_WITH_AS(load_volume(dir.path() / "v.raw"), doctest::Contains("corrupt JSON"), Error);
  }
  SUBCASE("sidecar without unit") {
    std::ofstream(dir.path() / "v.raw.json") << R"({"dims":[5,4,3],"voxel_mm":[1,2,0.5]})";
    CHECK_THROWS_AS(load_volume(dir.path() / "v.raw"), Error);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_volume(dir.path() / "nope.raw"), Error); }
}

TEST_CASE("value count must match the grid") {
  CHECK_THROWS_AS(Volume3D(kGrid, Unit::HU, std::vector<float>(59)), Error);
  CHECK_THROWS_AS(Volume3D(Grid{{1, 1, 1}, {0.0, 1.0, 1.0}, {0, 0, 0}}, Unit::HU), Error);
  CHECK(unit_from_string(to_string(Unit::Attenuation)) == Unit::Attenuation);
}
