#pragma once

#include <optional>
#include <string_view>

namespace tcbct::simd {

/// Instruction set used by the projection and backprojection kernels.
enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// Best variant this binary and CPU support.
Isa detected_isa();

/// Variant in use: the override if set, else TRUNC_CBCT_SIMD=scalar|avx2,
/// else detected_isa(). Requests the CPU cannot run fall back to scalar.
Isa active_isa();
void set_isa_override(std::optional<Isa> isa);

}  // namespace tcbct::simd
