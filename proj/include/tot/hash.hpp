#pragma once

#include <string>
#include <string_view>

namespace tot {

// 128-bit content hash (two FNV-1a 64 passes with distinct offsets), hex encoded.
// Stable across platforms and runs; used for state ids and completion cache keys.
std::string content_hash(std::string_view data);

} // namespace tot
