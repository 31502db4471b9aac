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

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "iichain/canonical.hpp"
#include "iichain/encoding.hpp"
#include "iichain/types.hpp"

namespace iichain {

// ---------------------------------------------------------------------------
// Block construction and shape validation.
// ---------------------------------------------------------------------------

namespace detail {

// Throws ShapeError naming the first field that breaks its invariant.
// Does not touch block_id: callers compute or check it separately.
inline void check_block_fields(const AsNumber asn, std::string_view seq,
                               std::string_view type, std::string_view previous,
                               std::string_view obsoletes,
                               std::string_view signature) {
  if (!asn.valid()) throw ShapeError("invalid asn: must be a positive 32-bit AS number");
  if (!seq_label_valid(seq))
    throw ShapeError("invalid block_seq: '" + std::string(seq) + "'");
  if (type.empty()) throw ShapeError("invalid block_type: must be non-empty");
  if (!previous.empty() && !hash_hex_valid(previous))
    throw ShapeError("invalid previous_block_id: not a SHA-256 hex digest");
  if (!obsoletes.empty() && !hash_hex_valid(obsoletes))
    throw ShapeError("invalid obsoletes_block_id: not a SHA-256 hex digest");
  if (!signature.empty() && !base64_valid(signature))
    throw ShapeError("invalid signature: not base64");
  if (type == kGenesisType) {
    if (!previous.empty())
      throw ShapeError("invalid previous_block_id: Genesis must have none");
    if (!obsoletes.empty())
      throw ShapeError("invalid obsoletes_block_id: Genesis must have none");
  } else if (previous.empty()) {
    throw ShapeError("invalid previous_block_id: required for non-Genesis blocks");
  }
}

}  // namespace detail

// Assembles a block and stamps its block_id. All fields other than block_id
// are taken verbatim; an empty `obsoletes` means the block obsoletes nothing.
inline Block build_block(AsNumber asn, std::string seq, std::string type,
                         std::string data, std::string signature,
                         std::string previous, std::string obsoletes,
                         Timestamp timestamp) {
  detail::check_block_fields(asn, seq, type, previous, obsoletes, signature);
  Block b;
  b.asn = asn;
  b.block_seq = std::move(seq);
  b.obsoletes_block_id = std::move(obsoletes);
  b.timestamp = timestamp;
  b.block_type = std::move(type);
  b.previous_block_id = std::move(previous);
  b.data = std::move(data);
  b.signature = std::move(signature);
  b.block_id = compute_block_id(b);
  return b;
}

struct FieldViolation {
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<FieldViolation> violations;

  bool ok() const { return violations.empty(); }
};

// Report-based counterpart of build_block's checks, plus a recomputed-hash
// check: a block whose stored block_id no longer matches its content is
// reported as a shape violation, not silently accepted.
inline ValidationReport validate_block_shape(const Block& b) {
  ValidationReport report;
  auto bad = [&report](std::string field, std::string message) {
    report.violations.push_back({std::move(field), std::move(message)});
  };

  if (!b.asn.valid()) bad("asn", "must be a positive 32-bit AS number");
  if (!seq_label_valid(b.block_seq)) bad("block_seq", "malformed label '" + b.block_seq + "'");
  if (b.block_type.empty()) bad("block_type", "must be non-empty");
  if (!b.previous_block_id.empty() && !hash_hex_valid(b.previous_block_id))
    bad("previous_block_id", "not a SHA-256 hex digest");
  if (!b.obsoletes_block_id.empty() && !hash_hex_valid(b.obsoletes_block_id))
    bad("obsoletes_block_id", "not a SHA-256 hex digest");
  if (!b.signature.empty() && !base64_valid(b.signature))
    bad("signature", "not base64");
  if (b.is_genesis()) {
    if (!b.previous_block_id.empty())
      bad("previous_block_id", "Genesis must have none");
    if (!b.obsoletes_block_id.empty())
      bad("obsoletes_block_id", "Genesis must have none");
  } else if (b.previous_block_id.empty()) {
    bad("previous_block_id", "required for non-Genesis blocks");
  }
  if (!hash_hex_valid(b.block_id)) {
    bad("block_id", "not a SHA-256 hex digest");
  } else {
    try {
      if (compute_block_id(b) != b.block_id) bad("block_id", "block_id mismatch");
    } catch (const ShapeError&) {
      // Unserializable blocks were already reported field by field above.
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON-lines persistence. One object per line, keys in Table order:
// asn, block_seq, obsoletes_block_id, timestamp, block_type, block_id,
// previous_block_id, data, signature. This layout is normative for chain
// files and archive entries.
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json block_to_json(const Block& b) {
  return nlohmann::ordered_json{{"asn", b.asn.value},
                                {"block_seq", b.block_seq},
                                {"obsoletes_block_id", b.obsoletes_block_id},
                                {"timestamp", b.timestamp.to_string()},
                                {"block_type", b.block_type},
                                {"block_id", b.block_id},
                                {"previous_block_id", b.previous_block_id},
                                {"data", b.data},
                                {"signature", b.signature}};
}

inline std::string block_to_json_line(const Block& b) {
  return block_to_json(b).dump();
}

inline Block block_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ShapeError("block record: not a JSON object");
  if (j.size() != 9) throw ShapeError("block record: expected exactly 9 fields");
  auto str = [&j](const char* key) -> std::string {
    if (!j.contains(key) || !j.at(key).is_string())
      throw ShapeError(std::string("block record: missing string field ") + key);
    return j.at(key).get<std::string>();
  };
  if (!j.contains("asn") || !j.at("asn").is_number_unsigned())
    throw ShapeError("block record: missing unsigned field asn");
  const auto asn_raw = j.at("asn").get<std::uint64_t>();
  if (asn_raw == 0 || asn_raw > UINT32_MAX)
    throw ShapeError("block record: asn out of 32-bit range");

  Block b;
  b.asn = AsNumber{static_cast<std::uint32_t>(asn_raw)};
  b.block_seq = str("block_seq");
  b.obsoletes_block_id = str("obsoletes_block_id");
  const auto ts = Timestamp::parse(str("timestamp"));
  if (!ts) throw ShapeError("block record: malformed timestamp");
  b.timestamp = *ts;
  b.block_type = str("block_type");
  b.block_id = str("block_id");
  b.previous_block_id = str("previous_block_id");
  b.data = str("data");
  b.signature = str("signature");
  return b;
}

inline Block block_from_json_line(std::string_view line) {
  const auto j = nlohmann::ordered_json::parse(line, nullptr, false);
  if (j.is_discarded()) throw ShapeError("block record: invalid JSON");
  return block_from_json(j);
}

}  // namespace iichain
