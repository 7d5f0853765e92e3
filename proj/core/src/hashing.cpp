#include "satsplat/hashing.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "satsplat/errors.hpp"

namespace satsplat {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ull;
  }
  return state;
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string(), path.string());
  std::uint64_t state = 0xcbf29ce484222325ull;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    state = fnv1a64(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())),
                    state);
  }
  return to_hex(state);
}

}  // namespace satsplat
