#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace srbench {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Incremental SHA-256 for hashing multiple buffers.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view data);
  std::string hex_digest();

 private:
  void* ctx_;
};

/// Uniform value in [0, 1) derived from the first 8 bytes of SHA-256(`key`).
double hash_to_unit(std::string_view key);

}  // namespace srbench
