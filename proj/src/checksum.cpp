#include "tcbct/checksum.hpp"

#include <boost/crc.hpp>

#include <cstdio>

namespace tcbct {

std::string crc32_hex(std::span<const std::byte> bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(crc.checksum()));
  return buf;
}

std::string crc32_hex(std::string_view text) { return crc32_hex(std::as_bytes(std::span(text.data(), text.size()))); }

}  // namespace tcbct
