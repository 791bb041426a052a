#include <atomic>
#include <cstdlib>
#include <string>

#include "tcbct/kernels.hpp"
#include "tcbct/simd.hpp"

namespace tcbct::simd {

namespace {

// -1: no override, otherwise the Isa value.
std::atomic<int> g_override{-1};

bool cpu_has_avx2() {
#if defined(TCBCT_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
  static const Isa isa = cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
  return isa;
}

Isa active_isa() {
  Isa requested = detected_isa();
  if (const int o = g_override.load(); o >= 0) {
    requested = static_cast<Isa>(o);
  } else if (const char* env = std::getenv("TRUNC_CBCT_SIMD")) {
    const std::string name(env);
    if (name == "scalar") requested = Isa::Scalar;
    else if (name == "avx2") requested = Isa::Avx2;
  }
  if (requested == Isa::Avx2 && detected_isa() != Isa::Avx2) return Isa::Scalar;
  return requested;
}

void set_isa_override(std::optional<Isa> isa) { g_override = isa ? static_cast<int>(*isa) : -1; }

}  // namespace tcbct::simd

namespace tcbct::kernels {

MarchRaysFn march_rays_for(simd::Isa isa) {
#ifdef TCBCT_HAVE_AVX2
  if (isa == simd::Isa::Avx2 && simd::detected_isa() == simd::Isa::Avx2) return march_rays_avx2;
#endif
  (void)isa;
  return march_rays_scalar;
}

BackprojectRowFn backproject_row_for(simd::Isa isa) {
#ifdef TCBCT_HAVE_AVX2
  if (isa == simd::Isa::Avx2 && simd::detected_isa() == simd::Isa::Avx2) return backproject_row_avx2;
#endif
  (void)isa;
  return backproject_row_scalar;
}

}  // namespace tcbct::kernels
