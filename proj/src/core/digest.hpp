#pragma once

#include <string>
#include <string_view>

namespace sa {

// SHA-256 of the input bytes, returned as a lowercase hex string.
std::string sha256_hex(std::string_view data);

}  // namespace sa
