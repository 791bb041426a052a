#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcbct/error.hpp"

// Little-endian float32 payloads and JSON sidecars shared by the volume,
// projection and slice formats.
namespace tcbct::detail {

static_assert(std::endian::native == std::endian::little, "raw payloads are written in host order");

inline void write_f32_le(const std::filesystem::path& path, std::span<const float> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline std::vector<float> read_f32_le(const std::filesystem::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != expected * sizeof(float))
    throw Error("payload size mismatch in '" + path.string() + "': expected " +
                std::to_string(expected * sizeof(float)) + " bytes, found " + std::to_string(bytes));
  in.seekg(0);
  std::vector<float> values(expected);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw Error("read failed for '" + path.string() + "'");
  return values;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace tcbct::detail
