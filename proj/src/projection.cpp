#include "tcbct/projection.hpp"

#include <algorithm>
#include <cmath>

#include "raw_io.hpp"
#include "tcbct/error.hpp"
#include "tcbct/volume.hpp"

namespace tcbct {

ProjectionStack::ProjectionStack(const SystemGeometry& geom, DetectorKind kind, bool noise_applied)
    : geom_(geom), kind_(kind), noise_applied_(noise_applied) {
  values_.assign(static_cast<std::size_t>(n_views()) * n_rows() * n_cols(), 0.0f);
}

ProjectionStack::ProjectionStack(const SystemGeometry& geom, DetectorKind kind, bool noise_applied,
                                 std::vector<float> values)
    : geom_(geom), kind_(kind), noise_applied_(noise_applied), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(n_views()) * n_rows() * n_cols())
    throw Error("projection stack: value count does not match views x rows x cols");
}

ProjectionStack crop_to_physical(const ProjectionStack& stack) {
  if (stack.kind() != DetectorKind::Virtual) throw Error("crop_to_physical: input must be a virtual stack");
  const auto& geom = stack.geometry();
  ProjectionStack out(geom, DetectorKind::Physical, stack.noise_applied());
  const int offset = geom.physical_column_offset();
  for (int v = 0; v < stack.n_views(); ++v)
    for (int r = 0; r < stack.n_rows(); ++r) {
      const auto src = stack.row(v, r).subspan(offset, out.n_cols());
      std::copy(src.begin(), src.end(), out.row(v, r).begin());
    }
  return out;
}

void save_projections(const ProjectionStack& stack, const std::filesystem::path& path) {
  detail::write_f32_le(path, stack.values());
  detail::write_json(sidecar_path(path), {{"n_views", stack.n_views()},
                                          {"n_rows", stack.n_rows()},
                                          {"n_cols", stack.n_cols()},
                                          {"detector_kind", to_string(stack.kind())},
                                          {"noise_applied", stack.noise_applied()},
                                          {"geometry", stack.geometry().to_json()}});
}

ProjectionStack load_projections(const std::filesystem::path& path) {
  const auto header = detail::read_json(sidecar_path(path));
  try {
    const auto geom = build_geometry(header.at("geometry"));
    const auto kind = detector_kind_from_string(header.at("detector_kind").get<std::string>());
    const bool noisy = header.at("noise_applied").get<bool>();
    if (header.at("n_views").get<int>() != geom.n_views() || header.at("n_rows").get<int>() != geom.det_rows() ||
        header.at("n_cols").get<int>() != geom.cols(kind))
      throw Error("projection header '" + sidecar_path(path).string() + "' dims disagree with its geometry");
    auto values = detail::read_f32_le(path, static_cast<std::size_t>(geom.n_views()) * geom.det_rows() * geom.cols(kind));
    if (!std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); }))
      throw Error("projection file '" + path.string() + "' contains non-finite values");
    return ProjectionStack(geom, kind, noisy, std::move(values));
  } catch (const nlohmann::json::exception& e) {
    throw Error("projection header '" + sidecar_path(path).string() + "' is missing fields: " + e.what());
  }
}

}  // namespace tcbct
