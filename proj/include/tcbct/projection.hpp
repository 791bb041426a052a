#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "tcbct/geometry.hpp"

namespace tcbct {

/// Line integrals for every (view, row, col); columns run fastest.
class ProjectionStack {
 public:
  ProjectionStack(const SystemGeometry& geom, DetectorKind kind, bool noise_applied = false);
  ProjectionStack(const SystemGeometry& geom, DetectorKind kind, bool noise_applied, std::vector<float> values);

  const SystemGeometry& geometry() const { return geom_; }
  DetectorKind kind() const { return kind_; }
  bool noise_applied() const { return noise_applied_; }
  int n_views() const { return geom_.n_views(); }
  int n_rows() const { return geom_.det_rows(); }
  int n_cols() const { return geom_.cols(kind_); }

  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }
  std::size_t index(int view, int row, int col) const {
    return (static_cast<std::size_t>(view) * n_rows() + row) * n_cols() + col;
  }
  float at(int view, int row, int col) const { return values_[index(view, row, col)]; }
  float& at(int view, int row, int col) { return values_[index(view, row, col)]; }
  std::span<const float> row(int view, int r) const {
    return std::span<const float>(values_).subspan(index(view, r, 0), n_cols());
  }
  std::span<float> row(int view, int r) { return std::span<float>(values_).subspan(index(view, r, 0), n_cols()); }

  friend bool operator==(const ProjectionStack&, const ProjectionStack&) = default;

 private:
  SystemGeometry geom_;
  DetectorKind kind_;
  bool noise_applied_;
  std::vector<float> values_;
};

/// Central physical-width window of a virtual stack.
ProjectionStack crop_to_physical(const ProjectionStack& virtual_stack);

/// Projection file: raw little-endian float32 (col, row, view order) plus a
/// JSON sidecar with dims, detector kind, noise flag and geometry.
void save_projections(const ProjectionStack& stack, const std::filesystem::path& path);
ProjectionStack load_projections(const std::filesystem::path& path);

}  // namespace tcbct
