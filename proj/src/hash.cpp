#include "tot/hash.hpp"

#include <cstdint>

namespace tot {
namespace {

constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::string_view data, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

void append_hex(std::string& out, std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  for (int shift = 60; shift >= 0; shift -= 4) {
    out.push_back(digits[(v >> shift) & 0xF]);
  }
}

} // namespace

std::string content_hash(std::string_view data) {
  std::string out;
  out.reserve(32);
  append_hex(out, fnv1a(data, 14695981039346656037ULL));
  append_hex(out, fnv1a(data, 0x9ae16a3b2f90404fULL));
  return out;
}

} // namespace tot
