#pragma once

#include <string>

namespace conelab {

// Hex-encoded SHA-256 digest (OpenSSL EVP).
std::string sha256_hex(const std::string& data);

}  // namespace conelab
