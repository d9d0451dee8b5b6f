#pragma once
// Binary weight archive:
//   "LPNETW01" | u64 L | u64 dims[L+1] | per level l = 1..L:
//   f64 tau_l, u8 tied, A_{l-1} (M_l x M_{l-1}), B_{l-1} (M_{l-1} x M_l) if untied
//   | u64 checksum
// Integers and doubles are little-endian, matrices row-major. The checksum is
// the sum of all bytes between the magic and the checksum, mod 2^64.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lpnet/core.hpp"

namespace lpnet {

std::vector<std::uint8_t> encode_archive(const Network& net);
Network decode_archive(const std::vector<std::uint8_t>& bytes);

void save_archive(const Network& net, const std::filesystem::path& path);
Network load_archive(const std::filesystem::path& path);

/// Human-readable listing of an archive's levels.
std::string describe_archive(const Network& net);

}  // namespace lpnet
