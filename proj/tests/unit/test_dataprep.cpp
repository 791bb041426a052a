#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <set>

#include "helpers.hpp"
#include "tcbct/completion.hpp"
#include "tcbct/dataprep.hpp"
#include "tcbct/error.hpp"
#include "tcbct/phantom.hpp"
#include "tcbct/projector.hpp"

using namespace tcbct;

namespace {

PrepOptions zero_mode() {
  PrepOptions o;
  o.recon.extrapolation = Extrapolation::Zero;
  o.recon.grid = {{64, 64, 4}, {2.5, 2.5, 2.5}, {0.0, 0.0, 0.0}};
  return o;
}

Volume3D rib_ring() { return rasterize_phantom(rib_ring_phantom(), test::thin_grid()); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("pair modes and axes parse") {
  CHECK(pair_mode_from_string("task-specific") == PairMode::TaskSpecific);
  CHECK(to_string(PairMode::Conventional) == "conventional");
  CHECK_THROWS_AS(pair_mode_from_string("both"), Error);
  CHECK(slice_axis_from_string(to_string(SliceAxis::Sagittal)) == SliceAxis::Sagittal);
  CHECK_THROWS_AS(slice_axis_from_string("oblique"), Error);
}

TEST_CASE("an all-air volume gives an all-air pair") {
  const auto g = test::small_geometry();
  const Volume3D air(test::thin_grid(), Unit::HU, -1000.0f);
  const TrainingPair p = prepare_conventional(air, g, zero_mode());
  for (float x : p.input.values()) CHECK(x == -1000.0f);
  CHECK(p.label == p.input);
  CHECK(p.provenance["mode"] == "conventional");
  CHECK(p.provenance["seed"].is_null());
  CHECK(p.provenance["geometry_hash"] == geometry_hash(g));
  CHECK_THROWS_AS(prepare_conventional(hu_to_mu(air), g, zero_mode()), Error);
}

TEST_CASE("empty and full masks reduce to the simpler pairs exactly") {
  const auto g = test::small_geometry();
  const Volume3D f = rib_ring();
  for (PrepOptions opts : {zero_mode(), PrepOptions{}}) {
    opts.recon.grid = zero_mode().recon.grid;
    const TrainingPair none = prepare_task_specific(f, MaskVolume(f.grid()), g, opts);
    CHECK(none.label == none.input);
    const TrainingPair all = prepare_task_specific(f, MaskVolume(f.grid()).complement(), g, opts);
    CHECK(all.label == prepare_conventional(f, g, opts).label);
  }
}

TEST_CASE("task-specific inputs equal conventional inputs, noise included") {
  const auto g = test::small_geometry();
  const Volume3D f = rib_ring();
  PrepOptions opts = zero_mode();
  opts.noise = NoiseSettings{1e5, 17};
  const TrainingPair conv = prepare_conventional(f, g, opts);
  const TrainingPair task = prepare_task_specific(f, threshold_segment(f, 150.0), g, opts);
  CHECK(conv.input == task.input);
  CHECK(task.provenance["seed"] == 17);
  CHECK(task.provenance["photons_per_ray"] == 1e5);
  CHECK_THROWS_AS(prepare_task_specific(f, MaskVolume(zero_mode().recon.grid), g, opts), Error);
}

TEST_CASE("with zero extension the label differs from the input only by the SOI terms") {
  const auto g = test::small_geometry();
  const Volume3D f = rib_ring();
  const MaskVolume soi = threshold_segment(f, 150.0);
  REQUIRE(soi.count() > 0);
  const PrepOptions opts = zero_mode();
  const TrainingPair pair = prepare_task_specific(f, soi, g, opts);

  // Independent recomputation from the SOI alone.
  const auto [f_soi, f_others] = split_by_mask(hu_to_mu(f, opts.recon.mu_water), soi);
  const ProjectionStack soi_full = forward_project(f_soi, g, DetectorKind::Virtual);
  const Volume3D full = reconstruct_attenuation(soi_full, opts.recon);
  const Volume3D cut = reconstruct_attenuation(crop_to_physical(soi_full), opts.recon);

  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < full.values().size(); ++i) {
    const double expected = (static_cast<double>(full.values()[i]) - cut.values()[i]) * 1000.0 / opts.recon.mu_water;
    const double got = static_cast<double>(pair.label.values()[i]) - pair.input.values()[i];
    worst = std::max(worst, std::abs(got - expected));
    scale = std::max(scale, std::abs(expected));
  }
  CAPTURE(scale);
  CHECK(scale > 10.0);
  CHECK(worst <= 1e-4 * scale);
}

TEST_CASE("decomposition residual is reported on request") {
  const auto g = test::small_geometry();
  const Volume3D f = rib_ring();
  PrepOptions opts = zero_mode();
  opts.report_residual = true;
  const TrainingPair linear = prepare_task_specific(f, threshold_segment(f, 150.0), g, opts);
  REQUIRE(linear.decomposition_residual_hu);
  CHECK(*linear.decomposition_residual_hu < 1e-2);
  opts.recon.extrapolation = Extrapolation::Wce;
  const TrainingPair wce = prepare_task_specific(f, threshold_segment(f, 150.0), g, opts);
  REQUIRE(wce.decomposition_residual_hu);
  CHECK(wce.provenance["decomposition_residual_hu"] == *wce.decomposition_residual_hu);
  CHECK_FALSE(prepare_task_specific(f, threshold_segment(f, 150.0), g, zero_mode()).decomposition_residual_hu);
}

TEST_CASE("slice extraction layouts") {
  const Grid grid{{4, 3, 2}, {1, 1, 1}, {0, 0, 0}};
  Volume3D v(grid, Unit::HU);
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 4; ++i) v.at(i, j, k) = static_cast<float>(100 * k + 10 * j + i);
  CHECK(extract_slice(v, SliceAxis::Axial, 1) == std::vector<float>{100, 101, 102, 103, 110, 111, 112, 113, 120, 121, 122, 123});
  CHECK(extract_slice(v, SliceAxis::Coronal, 2) == std::vector<float>{20, 21, 22, 23, 120, 121, 122, 123});
  CHECK(extract_slice(v, SliceAxis::Sagittal, 3) == std::vector<float>{3, 13, 23, 103, 113, 123});
  CHECK_THROWS_AS(extract_slice(v, SliceAxis::Axial, 2), Error);
}

TEST_CASE("slice export writes one input and one label per slice") {
  test::TempDir dir("export");
  const auto g = test::small_geometry();
  const Grid grid{{8, 6, 10}, {2, 2, 2}, {0, 0, 0}};
  std::vector<TrainingPair> pairs;
  for (int p = 0; p < 2; ++p) {
    Volume3D in = test::random_volume(grid, 10 + p, -1000.0f, 1000.0f);
    Volume3D label = test::random_volume(grid, 20 + p, -1000.0f, 1000.0f);
    in = Volume3D(grid, Unit::HU, std::vector<float>(in.values().begin(), in.values().end()));
    label = Volume3D(grid, Unit::HU, std::vector<float>(label.values().begin(), label.values().end()));
    PrepOptions opts;
    opts.noise = NoiseSettings{1e6, 99};
    pairs.push_back({in, label, PairMode::TaskSpecific, {{"seed", 99}, {"options", opts.recon.to_json()}}, {}});
  }

  const DatasetManifest m = export_slices(pairs, SliceAxis::Axial, 2, 7, dir.path() / "ds", g);
  CHECK(m.entries.size() == 10);
  CHECK(m.seed == 99u);
  std::set<std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(dir.path() / "ds")) files.insert(e.path().filename().string());
  CHECK(files.size() == 21);
  CHECK(files.count(kManifestName) == 1);
  CHECK(files.count("pair1_slice6_label.raw") == 1);
  CHECK(files.count("pair0_slice2_input.raw") == 1);

  const DatasetManifest back = load_manifest(dir.path() / "ds" / kManifestName);
  CHECK(back.to_json() == m.to_json());
  for (const auto& e : back.entries) {
    CHECK(e.width == 8);
    CHECK(e.height == 6);
    CHECK(e.mode == PairMode::TaskSpecific);
    CHECK(load_slice(dir.path() / "ds", e.input, e.width, e.height) ==
          extract_slice(pairs[e.pair_id].input, SliceAxis::Axial, e.slice));
    CHECK(load_slice(dir.path() / "ds", e.label, e.width, e.height) ==
          extract_slice(pairs[e.pair_id].label, SliceAxis::Axial, e.slice));
  }

  const std::string first = slurp(dir.path() / "ds" / kManifestName);
  export_slices(pairs, SliceAxis::Axial, 2, 7, dir.path() / "ds", g);
  CHECK(slurp(dir.path() / "ds" / kManifestName) == first);

  const DatasetManifest sag = export_slices(pairs, SliceAxis::Sagittal, 0, 8, dir.path() / "sag", g);
  CHECK(sag.entries.size() == 16);
  CHECK(sag.entries.front().width == 6);
  CHECK(sag.entries.front().height == 10);

  CHECK_THROWS_AS(export_slices(pairs, SliceAxis::Axial, 3, 3, dir.path() / "e", g), Error);
  CHECK_THROWS_AS(export_slices(pairs, SliceAxis::Axial, 5, 11, dir.path() / "e", g), Error);
  CHECK_THROWS_AS(export_slices({}, SliceAxis::Axial, 0, 1, dir.path() / "e", g), Error);
  CHECK_THROWS_AS(load_slice(dir.path() / "ds", "pair0_slice2_input.raw", 8, 7), Error);
}

TEST_CASE("manifest JSON carries units and rejects garbage") {
  DatasetManifest m;
  m.grid = grid_to_json(test::thin_grid());
  m.geometry = test::small_geometry().to_json();
  m.entries.push_back({3, 40, SliceAxis::Coronal, "a.raw", "b.raw", PairMode::Conventional, 64, 4});
  const nlohmann::json j = m.to_json();
  CHECK(j["units"] == "HU");
  CHECK(j["seed"].is_null());
  const DatasetManifest back = DatasetManifest::from_json(j);
  CHECK(back.entries.at(0).axis == SliceAxis::Coronal);
  CHECK(back.entries.at(0).pair_id == 3);
  CHECK_FALSE(back.seed);
  CHECK_THROWS_AS(DatasetManifest::from_json({{"entries", 5}}), Error);
}

TEST_CASE("FOV cylinder mask") {
  const auto g = SystemGeometry(SystemGeometry::table1());
  const Grid grid{{101, 101, 3}, {2.0, 2.0, 2.0}, {0, 0, 0}};
  const MaskVolume m = fov_cylinder_mask(grid, g);
  CHECK(m.at(50, 50, 1));
  // x = 100 mm lies outside the 80.6 mm radius.
  CHECK_FALSE(m.at(100, 50, 1));
  CHECK(m.at(50 + 40, 50, 0));
  const double r = g.fov_radius_mm(DetectorKind::Physical);
  const double expected = std::numbers::pi * r * r / (2.0 * 2.0) * 3;
  CHECK(static_cast<double>(m.count()) == doctest::Approx(expected).epsilon(0.02));
}
