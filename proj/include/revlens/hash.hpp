#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace revlens {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// Hex string of `bytes` bytes from the system CSPRNG.
std::string random_token(std::size_t bytes = 16);

} // namespace revlens
