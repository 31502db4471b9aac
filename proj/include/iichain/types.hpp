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

#include <cstdint>
#include <ctime>
#include <cstdio>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace iichain {

// ---------------------------------------------------------------------------
// Error taxonomy. Every failure a caller may want to branch on gets its own
// type; all of them derive from Error so a catch-all is one clause.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error { public: using Error::Error; };          // malformed block/field
class NoGenesisError : public Error { public: using Error::Error; };      // chain without a Genesis block
class ClockError : public Error { public: using Error::Error; };          // clock regressed below chain tip
class ObsoletesRefError : public Error { public: using Error::Error; };   // bad obsoletes_block_id target
class NotFoundError : public Error { public: using Error::Error; };
class NotObsoleteError : public Error { public: using Error::Error; };    // removal target not obsolete
class ProtectedBlockError : public Error { public: using Error::Error; }; // Genesis cannot be removed
class InvalidLabelError : public Error { public: using Error::Error; };   // bad sequence label arithmetic
class CryptoError : public Error { public: using Error::Error; };
class DecryptionError : public Error { public: using Error::Error; };
class ExportError : public Error { public: using Error::Error; };
class ImportError : public Error { public: using Error::Error; };
class MalformedNameError : public Error { public: using Error::Error; };  // archive name does not parse
class ZipError : public Error { public: using Error::Error; };
class FetchError : public Error { public: using Error::Error; };
class StorageError : public Error { public: using Error::Error; };
class DuplicateVersionError : public Error { public: using Error::Error; };
class ObsoleteBlockError : public Error { public: using Error::Error; };  // resolve refused: block obsolete
class UnresolvableError : public Error { public: using Error::Error; };   // no stored version verifies
class RangeError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };

// ---------------------------------------------------------------------------
// AsNumber: a 32-bit Autonomous System Number, valid when >= 1.
// ---------------------------------------------------------------------------

struct AsNumber {
  std::uint32_t value{0};

  constexpr bool valid() const { return value >= 1; }

  // "AS18782": the prefix used in file names and payload text.
  std::string tag() const { return "AS" + std::to_string(value); }

  auto operator<=>(const AsNumber&) const = default;
};

// ---------------------------------------------------------------------------
// Timestamp: UTC instant at second precision. Serialized to RFC 3339
// `YYYY-MM-DDThh:mm:ssZ` in block fields and to the compact 14-digit
// `yyyymmddhhmmss` form in archive names.
// ---------------------------------------------------------------------------

struct Timestamp {
  std::int64_t secs{0};  // seconds since the Unix epoch

  static constexpr Timestamp from_unix(std::int64_t s) { return Timestamp{s}; }

  std::string to_string() const {
    std::tm tm = to_tm();
    char buf[80];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec);
    return buf;
  }

  std::string to_compact() const {
    std::tm tm = to_tm();
    char buf[80];
    std::snprintf(buf, sizeof buf, "%04d%02d%02d%02d%02d%02d",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec);
    return buf;
  }

  // Strict parse of the RFC 3339 Z form; rejects anything non-canonical
  // (wrong separators, out-of-range fields, Feb 30, ...).
  static std::optional<Timestamp> parse(std::string_view s) {
    if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' ||
        s[13] != ':' || s[16] != ':' || s[19] != 'Z') {
      return std::nullopt;
    }
    return from_fields(s.substr(0, 4), s.substr(5, 2), s.substr(8, 2),
                       s.substr(11, 2), s.substr(14, 2), s.substr(17, 2));
  }

  // Strict parse of the 14-digit `yyyymmddhhmmss` form.
  static std::optional<Timestamp> parse_compact(std::string_view s) {
    if (s.size() != 14) return std::nullopt;
    return from_fields(s.substr(0, 4), s.substr(4, 2), s.substr(6, 2),
                       s.substr(8, 2), s.substr(10, 2), s.substr(12, 2));
  }

  auto operator<=>(const Timestamp&) const = default;

 private:
  std::tm to_tm() const {
    std::time_t t = static_cast<std::time_t>(secs);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return tm;
  }

  static std::optional<Timestamp> from_fields(std::string_view year,
                                              std::string_view mon,
                                              std::string_view day,
                                              std::string_view hour,
                                              std::string_view min,
                                              std::string_view sec) {
    auto num = [](std::string_view f) -> int {
      int v = 0;
      for (char c : f) {
        if (c < '0' || c > '9') return -1;
        v = v * 10 + (c - '0');
      }
      return v;
    };
    const int y = num(year), mo = num(mon), d = num(day);
    const int h = num(hour), mi = num(min), se = num(sec);
    if (y < 0 || mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 ||
        mi < 0 || mi > 59 || se < 0 || se > 59) {
      return std::nullopt;
    }
    std::tm tm{};
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = se;
    const std::time_t t = timegm(&tm);
    Timestamp ts{static_cast<std::int64_t>(t)};
    // Round trip to reject non-existent dates that timegm normalizes away.
    std::tm check = ts.to_tm();
    if (check.tm_year != y - 1900 || check.tm_mon != mo - 1 ||
        check.tm_mday != d || check.tm_hour != h || check.tm_min != mi ||
        check.tm_sec != se) {
      return std::nullopt;
    }
    return ts;
  }
};

// Time source injected into every operation that stamps a block.
using Clock = std::function<Timestamp()>;

inline Clock system_clock_utc() {
  return [] { return Timestamp{static_cast<std::int64_t>(std::time(nullptr))}; };
}

inline Clock fixed_clock(Timestamp t) {
  return [t] { return t; };
}

// ---------------------------------------------------------------------------
// Field-level validators shared by the block and chain layers.
// ---------------------------------------------------------------------------

// 64 lowercase hex characters: a SHA-256 digest.
inline bool hash_hex_valid(std::string_view s) {
  if (s.size() != 64) return false;
  for (char c : s) {
    const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    if (!ok) return false;
  }
  return true;
}

namespace detail {

inline bool positive_int_label(std::string_view s) {
  if (s.empty() || s[0] == '0') return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace detail

// `^[1-9][0-9]*(-[1-9][0-9]*)?$`: plain labels live on the main chain,
// hyphenated ones on the obsolete chain.
inline bool seq_label_valid(std::string_view s) {
  const auto dash = s.find('-');
  if (dash == std::string_view::npos) return detail::positive_int_label(s);
  return detail::positive_int_label(s.substr(0, dash)) &&
         detail::positive_int_label(s.substr(dash + 1));
}

inline bool seq_label_plain(std::string_view s) {
  return detail::positive_int_label(s);
}

// Numeric value of a plain label; nullopt for hyphenated or malformed ones.
inline std::optional<std::uint64_t> seq_label_int(std::string_view s) {
  if (!seq_label_plain(s)) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : s) {
    if (v > (UINT64_MAX - 9) / 10) return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

// (original seq, suffix) of a hyphenated label.
inline std::optional<std::pair<std::uint64_t, std::uint64_t>> seq_label_parts(
    std::string_view s) {
  const auto dash = s.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  const auto orig = seq_label_int(s.substr(0, dash));
  const auto suffix = seq_label_int(s.substr(dash + 1));
  if (!orig || !suffix) return std::nullopt;
  return std::make_pair(*orig, *suffix);
}

// ---------------------------------------------------------------------------
// Block: the nine-field record every chain is made of.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kGenesisType = "Genesis";
inline constexpr std::string_view kPublicKeyType = "PublicKey";
inline constexpr std::string_view kIrrTypePrefix = "irr_";

struct Block {
  AsNumber asn{};
  std::string block_seq;           // "3" on the main chain, "3-1" once migrated
  std::string obsoletes_block_id;  // empty when this block obsoletes nothing
  Timestamp timestamp{};
  std::string block_type;
  std::string block_id;            // SHA-256 over the canonical form
  std::string previous_block_id;   // empty only for Genesis
  std::string data;                // opaque UTF-8 payload
  std::string signature;           // detached base64 signature over data, may be empty

  bool is_genesis() const { return block_type == kGenesisType; }

  bool operator==(const Block&) const = default;
};

}  // namespace iichain
