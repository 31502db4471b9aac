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

#include "iichain/encoding.hpp"
#include "iichain/types.hpp"

namespace iichain {

// ---------------------------------------------------------------------------
// Canonical block serialization.
//
// The byte layout below is normative: it is what gets hashed into block_id,
// and any external verifier must reproduce it bit for bit. One `key:value`
// line per field, joined by single '\n', in this exact order:
//
//   asn, block_seq, obsoletes_block_id, timestamp, block_type,
//   previous_block_id, data, signature
//
// block_id itself is never part of the canonical form. Absent optional
// fields serialize as the empty string. No trailing newline.
// ---------------------------------------------------------------------------

struct CanonicalForm {
  std::string bytes;

  bool operator==(const CanonicalForm&) const = default;
};

inline std::string sha256_hex(std::string_view bytes) {
  ensure_sodium();
  unsigned char digest[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(digest,
                     reinterpret_cast<const unsigned char*>(bytes.data()),
                     bytes.size());
  return to_hex(digest, sizeof digest);
}

inline CanonicalForm canonical_serialize(const Block& block) {
  if (!block.asn.valid()) throw ShapeError("canonical form: missing field asn");
  if (block.block_seq.empty())
    throw ShapeError("canonical form: missing field block_seq");
  if (block.block_type.empty())
    throw ShapeError("canonical form: missing field block_type");

  std::string out;
  out.reserve(160 + block.data.size() + block.signature.size());
  out += "asn:";
  out += std::to_string(block.asn.value);
  out += "\nblock_seq:";
  out += block.block_seq;
  out += "\nobsoletes_block_id:";
  out += block.obsoletes_block_id;
  out += "\ntimestamp:";
  out += block.timestamp.to_string();
  out += "\nblock_type:";
  out += block.block_type;
  out += "\nprevious_block_id:";
  out += block.previous_block_id;
  out += "\ndata:";
  out += block.data;
  out += "\nsignature:";
  out += block.signature;
  return CanonicalForm{std::move(out)};
}

inline std::string compute_block_id(const Block& block) {
  return sha256_hex(canonical_serialize(block).bytes);
}

}  // namespace iichain
