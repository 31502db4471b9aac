//------------------------------------------------------------------------------
//
//   Copyright 2026 The iichain Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <sodium.h>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iichain/types.hpp"

namespace iichain {

inline void ensure_sodium() {
  static const bool ok = [] {
    if (sodium_init() < 0) throw CryptoError("libsodium initialization failed");
    return true;
  }();
  (void)ok;
}

inline std::string to_hex(const unsigned char* data, std::size_t len) {
  std::string out(len * 2 + 1, '\0');
  sodium_bin2hex(out.data(), out.size(), data, len);
  out.resize(len * 2);
  return out;
}

inline std::string to_base64(const unsigned char* data, std::size_t len) {
  const std::size_t cap =
      sodium_base64_encoded_len(len, sodium_base64_VARIANT_ORIGINAL);
  std::string out(cap, '\0');
  sodium_bin2base64(out.data(), out.size(), data, len,
                    sodium_base64_VARIANT_ORIGINAL);
  out.resize(std::string_view(out.c_str()).size());
  return out;
}

inline std::string to_base64(std::string_view bytes) {
  return to_base64(reinterpret_cast<const unsigned char*>(bytes.data()),
                   bytes.size());
}

inline std::optional<std::vector<unsigned char>> from_base64(
    std::string_view text) {
  std::vector<unsigned char> out(text.size() / 4 * 3 + 3);
  std::size_t actual = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(),
                        nullptr, &actual, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    return std::nullopt;
  }
  out.resize(actual);
  return out;
}

inline bool base64_valid(std::string_view text) {
  return from_base64(text).has_value();
}

}  // namespace iichain
