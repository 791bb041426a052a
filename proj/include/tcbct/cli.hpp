#pragma once

#include <filesystem>
#include <ostream>
#include <string_view>

#include <json.hpp>

namespace tcbct::cli {

/// Fixed artifact names inside the output directory.
namespace artifact {
inline constexpr const char* kPhantom = "phantom.raw";
inline constexpr const char* kSoiMask = "soi_mask.raw";
inline constexpr const char* kFovMask = "fov_mask.raw";
inline constexpr const char* kUntruncated = "proj_untruncated.raw";
inline constexpr const char* kTruncated = "proj_truncated.raw";
inline constexpr const char* kTruncatedNoisy = "proj_truncated_noisy.raw";
inline constexpr const char* kExtrapolated = "proj_extrapolated.raw";
inline constexpr const char* kRecon = "recon.raw";
inline constexpr const char* kInput = "input.raw";
inline constexpr const char* kLabel = "label.raw";
inline constexpr const char* kPair = "pair.json";
inline constexpr const char* kDataset = "dataset";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kTrainerComparison = "trainer_comparison.json";
inline constexpr const char* kRunLog = "run_log.jsonl";
}  // namespace artifact

/// Applies "a.b.c=value" to `config`. The value is parsed as JSON when
/// possible and kept as a string otherwise; missing objects are created.
void apply_override(nlohmann::json& config, std::string_view assignment);

/// Rejects unknown top-level sections.
void validate_config(const nlohmann::json& config);

/// Entry point of the trunc-cbct tool. Returns 0 on success, 2 on usage
/// errors (including unknown subcommands) and 1 when a stage fails.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tcbct::cli
