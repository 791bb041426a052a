#include "tcbct/metrics.hpp"

#include <cmath>

#include "tcbct/error.hpp"

namespace tcbct {

namespace {

void check_pair(const Volume3D& x, const Volume3D& y, const MaskVolume& m, const char* who) {
  if (!(x.grid() == y.grid()) || !(x.grid() == m.grid())) throw Error(std::string(who) + ": grid mismatch");
  if (x.unit() != y.unit()) throw Error(std::string(who) + ": unit mismatch");
}

template <typename Fn>
double mean_over_mask(const Volume3D& x, const Volume3D& y, const MaskVolume& m, Fn&& fn) {
  const auto xv = x.values(), yv = y.values();
  const auto mv = m.values();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mv.size(); ++i)
    if (mv[i]) {
      sum += fn(static_cast<double>(xv[i]) - static_cast<double>(yv[i]));
      ++n;
    }
  return sum / static_cast<double>(n);
}

}  // namespace

double dice(const MaskVolume& a, const MaskVolume& b) {
  if (!(a.grid() == b.grid())) throw Error("dice: grid mismatch");
  const auto av = a.values(), bv = b.values();
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    na += av[i] != 0;
    nb += bv[i] != 0;
    both += av[i] != 0 && bv[i] != 0;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double rmse_in_mask(const Volume3D& x, const Volume3D& y, const MaskVolume& m) {
  check_pair(x, y, m, "rmse_in_mask");
  if (m.count() == 0) throw Error("rmse_in_mask: empty mask");
  return std::sqrt(mean_over_mask(x, y, m, [](double d) { return d * d; }));
}

double mae_in_mask(const Volume3D& x, const Volume3D& y, const MaskVolume& m) {
  check_pair(x, y, m, "mae_in_mask");
  if (m.count() == 0) throw Error("mae_in_mask: empty mask");
  return mean_over_mask(x, y, m, [](double d) { return std::abs(d); });
}

nlohmann::json EvaluationReport::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"dice", dice},
          {"rmse_in_fov_hu", opt(rmse_in_fov_hu)},
          {"rmse_out_fov_hu", opt(rmse_out_fov_hu)},
          {"mae_in_fov_hu", opt(mae_in_fov_hu)},
          {"mae_out_fov_hu", opt(mae_out_fov_hu)},
          {"threshold_hu", threshold_hu},
          {"masks",
           {{"dice_region", dice_outside_fov_only ? "outside-fov" : "full"},
            {"soi_voxels", soi_voxels},
            {"predicted_voxels", predicted_voxels},
            {"fov_voxels", fov_voxels}}}};
}

EvaluationReport evaluate_pair(const Volume3D& pred, const Volume3D& reference, const MaskVolume& soi_mask,
                               const MaskVolume& fov_mask, const EvaluationOptions& opts) {
  check_pair(pred, reference, soi_mask, "evaluate_pair");
  if (!(fov_mask.grid() == pred.grid())) throw Error("evaluate_pair: FOV mask grid mismatch");
  if (pred.unit() != Unit::HU) throw Error("evaluate_pair: volumes must be in HU");

  const MaskVolume outside = fov_mask.complement();
  MaskVolume predicted = threshold_segment(pred, opts.hu_threshold);
  MaskVolume soi = soi_mask;
  if (opts.dice_outside_fov_only) {
    predicted = predicted & outside;
    soi = soi & outside;
  }

  EvaluationReport r;
  r.dice = dice(predicted, soi);
  r.threshold_hu = opts.hu_threshold;
  r.dice_outside_fov_only = opts.dice_outside_fov_only;
  r.soi_voxels = soi.count();
  r.predicted_voxels = predicted.count();
  r.fov_voxels = fov_mask.count();
  if (r.fov_voxels > 0) {
    r.rmse_in_fov_hu = rmse_in_mask(pred, reference, fov_mask);
    r.mae_in_fov_hu = mae_in_mask(pred, reference, fov_mask);
  }
  if (outside.count() > 0) {
    r.rmse_out_fov_hu = rmse_in_mask(pred, reference, outside);
    r.mae_out_fov_hu = mae_in_mask(pred, reference, outside);
  }
  return r;
}

}  // namespace tcbct
