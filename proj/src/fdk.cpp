#include "tcbct/fdk.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <set>
#include <string>

#include "tcbct/completion.hpp"
#include "tcbct/error.hpp"
#include "tcbct/kernels.hpp"
#include "tcbct/parallel.hpp"

namespace tcbct {

namespace {

constexpr double kPi = std::numbers::pi;

template <typename Enum>
struct EnumNames {
  std::initializer_list<std::pair<Enum, const char*>> names;

  const char* name(Enum e) const {
    for (const auto& [value, text] : names)
      if (value == e) return text;
    return "?";
  }
  Enum parse(const std::string& key, const std::string& text) const {
    for (const auto& [value, name] : names)
      if (text == name) return value;
    throw Error("recon: invalid value '" + text + "' for '" + key + "'");
  }
};

const EnumNames<Extrapolation> kExtrapolation{{{Extrapolation::Wce, "wce"}, {Extrapolation::Zero, "zero"},
                                               {Extrapolation::None, "none"}}};
const EnumNames<FilterKind> kFilter{{{FilterKind::RamLak, "ram-lak"}, {FilterKind::SheppLogan, "shepp-logan"}}};
const EnumNames<Redundancy> kRedundancy{{{Redundancy::Parker, "parker"}, {Redundancy::Uniform, "uniform"}}};
const EnumNames<ParkerPolicy> kPolicy{{{ParkerPolicy::PhysicalFan, "physical-fan"},
                                       {ParkerPolicy::VirtualFan, "virtual-fan"}}};
const EnumNames<DetectorInterpolation> kInterp{{{DetectorInterpolation::Bilinear, "bilinear"},
                                                {DetectorInterpolation::Nearest, "nearest"}}};

// FFTW planning is not thread-safe; plans are built once per length and then
// executed concurrently through the new-array interface.
struct FftPlans {
  fftw_plan forward;
  fftw_plan inverse;
};

FftPlans plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, FftPlans> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  double* real = fftw_alloc_real(n);
  fftw_complex* spec = fftw_alloc_complex(n / 2 + 1);
  FftPlans plans{fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE),
                 fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE)};
  fftw_free(real);
  fftw_free(spec);
  cache.emplace(n, plans);
  return plans;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

int fft_length(int n_cols) {
  int n = 1;
  while (n < 2 * n_cols) n *= 2;
  return n;
}

}  // namespace

nlohmann::json ReconOptions::to_json() const {
  return {{"extrapolation", kExtrapolation.name(extrapolation)},
          {"filter", kFilter.name(filter)},
          {"redundancy", kRedundancy.name(redundancy)},
          {"parker_policy", kPolicy.name(parker_policy)},
          {"interpolation", kInterp.name(interpolation)},
          {"grid", grid_to_json(grid)},
          {"mu_water", mu_water},
          {"cosine_fallback_width", cosine_fallback_width}};
}

ReconOptions ReconOptions::from_json(const nlohmann::json& j, const ReconOptions& defaults) {
  if (!j.is_object()) throw Error("recon: options must be an object");
  static const std::set<std::string> known = {"extrapolation", "filter",   "redundancy", "parker_policy",
                                              "interpolation", "grid",     "mu_water",   "cosine_fallback_width"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw Error("recon: unknown key '" + key + "'");
  ReconOptions o = defaults;
  auto text = [&](const char* key) { return j.at(key).get<std::string>(); };
  try {
    if (j.contains("extrapolation")) o.extrapolation = kExtrapolation.parse("extrapolation", text("extrapolation"));
    if (j.contains("filter")) o.filter = kFilter.parse("filter", text("filter"));
    if (j.contains("redundancy")) o.redundancy = kRedundancy.parse("redundancy", text("redundancy"));
    if (j.contains("parker_policy")) o.parker_policy = kPolicy.parse("parker_policy", text("parker_policy"));
    if (j.contains("interpolation")) o.interpolation = kInterp.parse("interpolation", text("interpolation"));
    if (j.contains("grid")) o.grid = grid_from_json(j.at("grid"));
    if (j.contains("mu_water")) o.mu_water = j.at("mu_water").get<double>();
    if (j.contains("cosine_fallback_width")) o.cosine_fallback_width = j.at("cosine_fallback_width").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("recon: malformed options: ") + e.what());
  }
  if (!(o.mu_water > 0.0)) throw Error("recon: mu_water must be positive");
  if (o.cosine_fallback_width < 1) throw Error("recon: cosine_fallback_width must be >= 1");
  return o;
}

ReconOptions ReconOptions::from_json(const nlohmann::json& j) { return from_json(j, ReconOptions{}); }

ProjectionStack cosine_weight(const ProjectionStack& p) {
  const auto& geom = p.geometry();
  ProjectionStack out = p;
  const double sdd2 = geom.sdd_mm() * geom.sdd_mm();
  for (int r = 0; r < p.n_rows(); ++r) {
    const double v = geom.row_offset_mm(r);
    std::vector<float> w(p.n_cols());
    for (int c = 0; c < p.n_cols(); ++c) {
      const double u = geom.column_offset_mm(c, p.kind());
      w[c] = static_cast<float>(geom.sdd_mm() / std::sqrt(sdd2 + u * u + v * v));
    }
    for (int view = 0; view < p.n_views(); ++view) {
      auto row = out.row(view, r);
      for (int c = 0; c < p.n_cols(); ++c) row[c] *= w[c];
    }
  }
  return out;
}

double parker_weight(double progress, double gamma, double delta) {
  if (progress < 0.0 || progress > kPi + 2.0 * delta) return 0.0;
  if (progress < 2.0 * (delta + gamma)) {
    const double s = std::sin(0.25 * kPi * progress / (delta + gamma));
    return s * s;
  }
  if (progress <= kPi + 2.0 * gamma) return 1.0;
  const double s = std::sin(0.25 * kPi * (kPi + 2.0 * delta - progress) / (delta - gamma));
  return s * s;
}

RedundancyTable redundancy_weights(const SystemGeometry& geom, DetectorKind kind, Redundancy mode,
                                   ParkerPolicy policy) {
  RedundancyTable table{geom.n_views(), geom.cols(kind), {}};
  table.weights.resize(static_cast<std::size_t>(table.n_views) * table.n_cols);
  const double range = geom.params().angular_range_deg * kPi / 180.0;
  if (mode == Redundancy::Uniform) {
    std::fill(table.weights.begin(), table.weights.end(), static_cast<float>(kPi / range));
    return table;
  }
  const DetectorKind fan_kind = policy == ParkerPolicy::PhysicalFan ? DetectorKind::Physical : DetectorKind::Virtual;
  const double gamma_max = geom.half_fan_angle_rad(fan_kind);
  if (range < kPi + 2.0 * gamma_max)
    throw Error("redundancy_weights: angular range is below 180 deg plus the fan angle");
  const double delta = 0.5 * (range - kPi);
  const int direction = geom.params().rotation_direction;
  for (int c = 0; c < table.n_cols; ++c) {
    // Columns beyond the selected fan inherit the weight of its edge.
    const double gamma = std::clamp(geom.fan_angle_rad(c, kind), -gamma_max, gamma_max) * direction;
    for (int v = 0; v < table.n_views; ++v) {
      const double progress = geom.view_progress_deg(v) * kPi / 180.0;
      table.weights[static_cast<std::size_t>(v) * table.n_cols + c] =
          static_cast<float>(parker_weight(progress, gamma, delta));
    }
  }
  return table;
}

ProjectionStack apply_redundancy(const ProjectionStack& p, const RedundancyTable& table) {
  if (table.n_views != p.n_views() || table.n_cols != p.n_cols())
    throw Error("apply_redundancy: table does not match the stack");
  ProjectionStack out = p;
  for (int v = 0; v < p.n_views(); ++v)
    for (int r = 0; r < p.n_rows(); ++r) {
      auto row = out.row(v, r);
      for (int c = 0; c < p.n_cols(); ++c) row[c] *= table.at(v, c);
    }
  return out;
}

double ramp_tap(int n, double pitch, FilterKind kind) {
  const double p2 = pitch * pitch;
  if (kind == FilterKind::SheppLogan) return -2.0 / (kPi * kPi * p2 * (4.0 * n * n - 1.0));
  if (n == 0) return 1.0 / (4.0 * p2);
  if (n % 2 == 0) return 0.0;
  return -1.0 / (kPi * kPi * n * n * p2);
}

void ramp_filter_rows(std::span<float> rows, int n_cols, double pitch, FilterKind kind) {
  if (n_cols <= 0 || rows.size() % static_cast<std::size_t>(n_cols) != 0)
    throw Error("ramp_filter_rows: row length does not divide the data");
  const int n = fft_length(n_cols);
  const int n_spec = n / 2 + 1;
  const FftPlans plans = plans_for(n);

  // Frequency response of the zero-padded spatial kernel; real because the
  // kernel is even.
  std::vector<double> response(n_spec);
  {
    std::unique_ptr<double, FftwDeleter> taps(fftw_alloc_real(n));
    std::unique_ptr<fftw_complex, FftwDeleter> spec(fftw_alloc_complex(n_spec));
    for (int i = 0; i < n; ++i) taps.get()[i] = ramp_tap(i <= n / 2 ? i : i - n, pitch, kind);
    fftw_execute_dft_r2c(plans.forward, taps.get(), spec.get());
    const double scale = pitch / n;
    for (int k = 0; k < n_spec; ++k) response[k] = spec.get()[k][0] * scale;
  }

  const std::size_t n_rows = rows.size() / static_cast<std::size_t>(n_cols);
  constexpr std::size_t kBlock = 64;
  parallel_for((n_rows + kBlock - 1) / kBlock, [&](std::size_t block) {
    std::unique_ptr<double, FftwDeleter> buf(fftw_alloc_real(n));
    std::unique_ptr<fftw_complex, FftwDeleter> spec(fftw_alloc_complex(n_spec));
    const std::size_t end = std::min(n_rows, (block + 1) * kBlock);
    for (std::size_t r = block * kBlock; r < end; ++r) {
      float* row = rows.data() + r * n_cols;
      std::fill(buf.get(), buf.get() + n, 0.0);
      std::copy(row, row + n_cols, buf.get());
      fftw_execute_dft_r2c(plans.forward, buf.get(), spec.get());
      for (int k = 0; k < n_spec; ++k) {
        spec.get()[k][0] *= response[k];
        spec.get()[k][1] *= response[k];
      }
      fftw_execute_dft_c2r(plans.inverse, spec.get(), buf.get());
      for (int c = 0; c < n_cols; ++c) row[c] = static_cast<float>(buf.get()[c]);
    }
  });
}

ProjectionStack ramp_filter(const ProjectionStack& p, FilterKind kind) {
  const auto& geom = p.geometry();
  ProjectionStack out = p;
  const double pitch = geom.params().pixel_w_mm * geom.sid_mm() / geom.sdd_mm();
  ramp_filter_rows(out.values(), out.n_cols(), pitch, kind);
  return out;
}

Volume3D backproject(const ProjectionStack& p, const Grid& grid, DetectorInterpolation interp) {
  return backproject(p, grid, interp, simd::active_isa());
}

Volume3D backproject(const ProjectionStack& p, const Grid& grid, DetectorInterpolation interp, simd::Isa isa) {
  grid.validate();
  const auto& geom = p.geometry();
  const int cols = p.n_cols(), rows = p.n_rows(), views = p.n_views();
  const int stride = cols + 1;
  const std::size_t view_size = static_cast<std::size_t>(stride) * (rows + 1);

  std::vector<float> padded(view_size * views, 0.0f);
  for (int v = 0; v < views; ++v)
    for (int r = 0; r < rows; ++r) {
      const auto src = p.row(v, r);
      std::copy(src.begin(), src.end(), padded.begin() + v * view_size + static_cast<std::size_t>(r) * stride);
    }

  std::vector<float> cos_b(views), sin_b(views);
  for (int v = 0; v < views; ++v) {
    cos_b[v] = static_cast<float>(std::cos(geom.view_angle_rad(v)));
    sin_b[v] = static_cast<float>(std::sin(geom.view_angle_rad(v)));
  }

  Volume3D out(grid, Unit::Attenuation);
  const auto kernel = kernels::backproject_row_for(isa);
  const int nx = grid.dims[0], ny = grid.dims[1];
  const float d_beta = static_cast<float>(geom.params().angular_step_deg * kPi / 180.0);

  parallel_for(static_cast<std::size_t>(grid.dims[2]), [&](std::size_t slice) {
    const int k = static_cast<int>(slice);
    float* acc = out.values().data() + grid.index(0, 0, k);
    kernels::BackprojectRow args;
    args.sid = static_cast<float>(geom.sid_mm());
    args.u_scale = static_cast<float>(geom.sdd_mm() / geom.params().pixel_w_mm);
    args.v_scale = static_cast<float>(geom.sdd_mm() / geom.params().pixel_h_mm);
    args.col_center = static_cast<float>((cols - 1) * 0.5);
    args.row_center = static_cast<float>((rows - 1) * 0.5);
    args.x0 = static_cast<float>(grid.center_coord(0, 0));
    args.dx = static_cast<float>(grid.voxel_mm[0]);
    args.z = static_cast<float>(grid.center_coord(2, k));
    args.nx = nx;
    for (int v = 0; v < views; ++v) {
      args.view = {padded.data() + v * view_size, cols, rows, stride};
      args.cos_b = cos_b[v];
      args.sin_b = sin_b[v];
      for (int j = 0; j < ny; ++j) {
        args.y = static_cast<float>(grid.center_coord(1, j));
        float* row_acc = acc + static_cast<std::size_t>(j) * nx;
        if (interp == DetectorInterpolation::Bilinear) {
          kernel(args, row_acc);
          continue;
        }
        for (int i = 0; i < nx; ++i) {
          const float x = args.x0 + static_cast<float>(i) * args.dx;
          const float depth = args.sid - (x * args.cos_b + args.y * args.sin_b);
          if (!(depth > 0.0f)) continue;
          const float inv = 1.0f / depth;
          const long iu = std::lround((args.y * args.cos_b - x * args.sin_b) * inv * args.u_scale + args.col_center);
          const long iv = std::lround(args.z * inv * args.v_scale + args.row_center);
          if (iu < 0 || iu >= cols || iv < 0 || iv >= rows) continue;
          const float w = args.sid * inv;
          row_acc[i] += args.view.data[iv * stride + iu] * (w * w);
        }
      }
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(nx) * ny; ++i) acc[i] *= d_beta;
  });
  return out;
}

Volume3D reconstruct_attenuation(const ProjectionStack& p, const ReconOptions& opts) {
  if (!(opts.mu_water > 0.0)) throw Error("reconstruct: mu_water must be positive");
  opts.grid.validate();
  const ProjectionStack* stack = &p;
  ProjectionStack completed(p.geometry(), DetectorKind::Virtual);
  if (p.kind() == DetectorKind::Physical) {
    switch (opts.extrapolation) {
      case Extrapolation::None:
        throw Error("reconstruct: extrapolation 'none' requires virtual-detector input");
      case Extrapolation::Zero:
        completed = zero_extend(p);
        break;
      case Extrapolation::Wce:
        completed = wce_extrapolate(p, WceOptions{opts.mu_water, opts.cosine_fallback_width});
        break;
    }
    stack = &completed;
  }
  const auto table = redundancy_weights(stack->geometry(), DetectorKind::Virtual, opts.redundancy, opts.parker_policy);
  ProjectionStack weighted = apply_redundancy(cosine_weight(*stack), table);
  ProjectionStack filtered = ramp_filter(weighted, opts.filter);
  return backproject(filtered, opts.grid, opts.interpolation);
}

Volume3D reconstruct(const ProjectionStack& p, const ReconOptions& opts) {
  return mu_to_hu(reconstruct_attenuation(p, opts), opts.mu_water);
}

Volume3D reconstruct(const ProjectionStack& p, const SystemGeometry& geom, const ReconOptions& opts) {
  if (!(p.geometry() == geom)) throw Error("reconstruct: stack geometry does not match");
  return reconstruct(p, opts);
}

}  // namespace tcbct
