#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace satsplat {

// 64-bit FNV-1a. Used for artifact fingerprints in the run ledger, not for
// anything security related.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t state = 0xcbf29ce484222325ull);

// Hex digest of a file's contents; throws IoError if unreadable.
std::string hash_file(const std::filesystem::path& path);

std::string to_hex(std::uint64_t value);

}  // namespace satsplat
