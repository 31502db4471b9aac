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

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "iichain/block.hpp"
#include "iichain/keystore.hpp"
#include "iichain/types.hpp"

namespace iichain {

// ---------------------------------------------------------------------------
// Chain: one ASN's main chain. Genesis-first, hash-linked, strictly
// increasing integer sequence labels (gaps allowed once blocks migrate to the
// obsolete chain).
//
// Concurrency: single writer per chain. Appends must be serialized
// externally; reads may run concurrently with each other but not with a
// writer.
// ---------------------------------------------------------------------------

struct Chain {
  AsNumber asn{};
  std::vector<Block> blocks;
};

enum class FailureKind {
  hash_mismatch,
  broken_link,
  bad_genesis,
  seq_order,
  signature_invalid,
  missing_key,
};

inline std::string_view to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::hash_mismatch: return "hash-mismatch";
    case FailureKind::broken_link: return "broken-link";
    case FailureKind::bad_genesis: return "bad-genesis";
    case FailureKind::seq_order: return "seq-order";
    case FailureKind::signature_invalid: return "signature-invalid";
    case FailureKind::missing_key: return "missing-key";
  }
  return "unknown";
}

struct VerificationFailure {
  std::string seq;  // label of the offending block ("-" when chain-level)
  FailureKind kind;
  std::string detail;
};

struct VerificationReport {
  std::vector<VerificationFailure> failures;

  bool ok() const { return failures.empty(); }

  void add(std::string seq, FailureKind kind, std::string detail) {
    failures.push_back({std::move(seq), kind, std::move(detail)});
  }

  nlohmann::ordered_json to_json() const {
    auto list = nlohmann::ordered_json::array();
    for (const auto& f : failures) {
      list.push_back(nlohmann::ordered_json{{"seq", f.seq},
                                            {"kind", to_string(f.kind)},
                                            {"detail", f.detail}});
    }
    return nlohmann::ordered_json{{"ok", ok()}, {"failures", list}};
  }
};

namespace detail {

enum class SeqRule { main_chain, obsolete_chain };

// Structural verification shared by main and obsolete chains: Genesis rule,
// hash validity, linkage, and the kind-specific sequence-label ordering.
inline VerificationReport verify_linked_blocks(AsNumber asn,
                                               const std::vector<Block>& blocks,
                                               SeqRule rule) {
  VerificationReport report;
  if (blocks.empty()) {
    report.add("-", FailureKind::bad_genesis, "chain has no blocks");
    return report;
  }

  const Block& genesis = blocks.front();
  if (!genesis.is_genesis())
    report.add(genesis.block_seq, FailureKind::bad_genesis,
               "first block has type '" + genesis.block_type + "'");
  if (genesis.block_seq != "1")
    report.add(genesis.block_seq, FailureKind::bad_genesis,
               "Genesis block_seq must be \"1\"");
  if (!genesis.previous_block_id.empty())
    report.add(genesis.block_seq, FailureKind::bad_genesis,
               "Genesis must have empty previous_block_id");
  if (!genesis.obsoletes_block_id.empty())
    report.add(genesis.block_seq, FailureKind::bad_genesis,
               "Genesis must have empty obsoletes_block_id");

  std::uint64_t last_plain = 0;
  std::uint64_t last_suffix = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];

    if (b.asn != asn)
      report.add(b.block_seq, FailureKind::broken_link,
                 "block asn " + std::to_string(b.asn.value) +
                     " differs from chain owner " + std::to_string(asn.value));

    // Sequence ordering.
    if (rule == SeqRule::main_chain || i == 0) {
      const auto n = seq_label_int(b.block_seq);
      if (!n) {
        report.add(b.block_seq, FailureKind::seq_order,
                   "label is not a plain positive integer");
      } else if (i > 0 && *n <= last_plain) {
        report.add(b.block_seq, FailureKind::seq_order,
                   "label does not increase past " + std::to_string(last_plain));
      } else {
        last_plain = *n;
      }
    } else {
      const auto parts = seq_label_parts(b.block_seq);
      if (!parts) {
        report.add(b.block_seq, FailureKind::seq_order,
                   "label is not of the form <int>-<int>");
      } else if (parts->second <= last_suffix) {
        report.add(b.block_seq, FailureKind::seq_order,
                   "hyphen suffix does not increase past " +
                       std::to_string(last_suffix));
      } else {
        last_suffix = parts->second;
      }
    }

    // Linkage.
    if (i > 0 && b.previous_block_id != blocks[i - 1].block_id)
      report.add(b.block_seq, FailureKind::broken_link,
                 "previous_block_id does not match block " +
                     blocks[i - 1].block_seq);

    // Hash validity.
    try {
      if (compute_block_id(b) != b.block_id)
        report.add(b.block_seq, FailureKind::hash_mismatch,
                   "stored block_id does not match recomputed hash");
    } catch (const ShapeError& e) {
      report.add(b.block_seq, FailureKind::hash_mismatch,
                 std::string("block cannot be serialized: ") + e.what());
    }
  }
  return report;
}

// Ids referenced by some block's obsoletes_block_id, i.e. the obsolete set.
inline std::unordered_set<std::string_view> obsoleted_ids(
    const std::vector<Block>& blocks) {
  std::unordered_set<std::string_view> ids;
  for (const Block& b : blocks) {
    if (!b.obsoletes_block_id.empty()) ids.insert(b.obsoletes_block_id);
  }
  return ids;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Creation and growth.
// ---------------------------------------------------------------------------

inline Chain create_chain(AsNumber asn, const Clock& clock = system_clock_utc()) {
  if (!asn.valid()) throw ShapeError("invalid asn");
  const Timestamp now = clock();
  Chain chain;
  chain.asn = asn;
  chain.blocks.push_back(build_block(
      asn, "1", std::string(kGenesisType),
      "IIBlockchain Genesis for " + asn.tag() + " at " + now.to_string(),
      /*signature=*/"", /*previous=*/"", /*obsoletes=*/"", now));
  return chain;
}

// Appends a block with the next integer label. An empty `obsoletes` means
// plain growth; otherwise the target must exist in this chain, must not be
// obsolete yet, and must carry the same block_type as the new block.
inline const Block& append_block(Chain& chain, std::string type,
                                 std::string data, std::string signature,
                                 const std::string& obsoletes = {},
                                 const Clock& clock = system_clock_utc()) {
  if (chain.blocks.empty())
    throw NoGenesisError("cannot append to a chain without a Genesis block");
  const Block& tip = chain.blocks.back();

  const Timestamp now = clock();
  if (now < tip.timestamp)
    throw ClockError("clock reads " + now.to_string() +
                     ", earlier than chain tip " + tip.timestamp.to_string());

  const auto tip_seq = seq_label_int(tip.block_seq);
  if (!tip_seq)
    throw ShapeError("chain tip has non-integer label '" + tip.block_seq + "'");

  if (!obsoletes.empty()) {
    const Block* target = nullptr;
    for (const Block& b : chain.blocks) {
      if (b.block_id == obsoletes) {
        target = &b;
        break;
      }
    }
    if (target == nullptr)
      throw ObsoletesRefError("obsoletes target not found in chain: " + obsoletes);
    for (const Block& b : chain.blocks) {
      if (b.obsoletes_block_id == obsoletes)
        throw ObsoletesRefError("obsoletes target is already obsolete (by block " +
                                b.block_seq + ")");
    }
    if (target->block_type != type)
      throw ObsoletesRefError("obsoletes target has type '" +
                              target->block_type + "', new block has '" + type +
                              "'");
  }

  Block b = build_block(chain.asn, std::to_string(*tip_seq + 1),
                        std::move(type), std::move(data), std::move(signature),
                        tip.block_id, obsoletes, now);
  chain.blocks.push_back(std::move(b));
  return chain.blocks.back();
}

// Appends a PublicKey block carrying the keypair's serialized public record,
// self-signed. Pass `obsoletes` = the previous key block's id to rotate.
inline const Block& publish_public_key(Chain& chain, const KeyPair& keypair,
                                       const Clock& clock = system_clock_utc(),
                                       const std::string& obsoletes = {}) {
  const std::string payload = keypair.pub.to_json();
  return append_block(chain, std::string(kPublicKeyType), payload,
                      sign_data(keypair, payload), obsoletes, clock);
}

// ---------------------------------------------------------------------------
// Lookups. All are single linear scans.
// ---------------------------------------------------------------------------

inline const Block* get_block_by_id(const Chain& chain, std::string_view block_id) {
  for (const Block& b : chain.blocks) {
    if (b.block_id == block_id) return &b;
  }
  return nullptr;
}

inline const Block* get_block_by_seq(const Chain& chain, std::string_view seq) {
  for (const Block& b : chain.blocks) {
    if (b.block_seq == seq) return &b;
  }
  return nullptr;
}

// Selector is either a 64-hex block id or a sequence label.
inline const Block* get_block(const Chain& chain, std::string_view selector) {
  return hash_hex_valid(selector) ? get_block_by_id(chain, selector)
                                  : get_block_by_seq(chain, selector);
}

// True iff some block in the chain carries obsoletes_block_id == block_id.
inline bool is_obsolete(const Chain& chain, std::string_view block_id) {
  for (const Block& b : chain.blocks) {
    if (!b.obsoletes_block_id.empty() && b.obsoletes_block_id == block_id)
      return true;
  }
  return false;
}

// Highest-seq non-obsolete block of the given type, or nullptr.
inline const Block* latest_of_type(const Chain& chain, std::string_view type) {
  const auto obsoleted = detail::obsoleted_ids(chain.blocks);
  for (auto it = chain.blocks.rbegin(); it != chain.blocks.rend(); ++it) {
    if (it->block_type == type && !obsoleted.contains(it->block_id)) return &*it;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Verification.
//
// Stage (a), verify_chain_integrity, checks recomputed hashes, the Genesis
// rule, linkage, and label ordering.
// Stage (b), verify_block_trust, checks the block's detached signature
// against the owning public key.
// ---------------------------------------------------------------------------

inline VerificationReport verify_chain_integrity(const Chain& chain) {
  return detail::verify_linked_blocks(chain.asn, chain.blocks,
                                      detail::SeqRule::main_chain);
}

namespace detail {

// The key owning the block at `target_index`: the latest PublicKey block
// before it that was not yet obsoleted at that point of the chain. Evaluating
// obsolescence against the prefix (not the whole chain) keeps historical
// blocks verifiable after a key rotation.
inline std::optional<PublicKeyRecord> resolve_owner_key(
    const Chain& chain, std::size_t target_index) {
  std::vector<const Block*> candidates;
  std::unordered_set<std::string_view> obsoleted;
  for (std::size_t i = 0; i < target_index; ++i) {
    const Block& b = chain.blocks[i];
    if (b.block_type == kPublicKeyType) candidates.push_back(&b);
    if (!b.obsoletes_block_id.empty()) obsoleted.insert(b.obsoletes_block_id);
  }
  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
    if (obsoleted.contains((*it)->block_id)) continue;
    try {
      return PublicKeyRecord::from_json((*it)->data);
    } catch (const ShapeError&) {
      return std::nullopt;  // unparseable key payload: no usable key
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Verifies ownership of the block's data. Genesis blocks pass vacuously.
// PublicKey blocks pass vacuously too unless `anchor` pins the expected key,
// in which case the payload must match the anchor and the self-signature must
// hold. For every other block the signature is checked against the anchor if
// given, else against the owning in-chain key.
inline VerificationReport verify_block_trust(
    const Chain& chain, std::string_view block_id,
    const std::optional<PublicKeyRecord>& anchor = std::nullopt) {
  std::size_t index = chain.blocks.size();
  for (std::size_t i = 0; i < chain.blocks.size(); ++i) {
    if (chain.blocks[i].block_id == block_id) {
      index = i;
      break;
    }
  }
  if (index == chain.blocks.size())
    throw NotFoundError("block not in chain: " + std::string(block_id));

  const Block& b = chain.blocks[index];
  VerificationReport report;

  if (b.is_genesis()) return report;

  if (b.block_type == kPublicKeyType) {
    if (!anchor) return report;  // bootstrap exemption
    PublicKeyRecord rec;
    try {
      rec = PublicKeyRecord::from_json(b.data);
    } catch (const ShapeError& e) {
      report.add(b.block_seq, FailureKind::signature_invalid,
                 std::string("PublicKey payload unparseable: ") + e.what());
      return report;
    }
    if (rec != *anchor) {
      report.add(b.block_seq, FailureKind::signature_invalid,
                 "PublicKey payload does not match pinned anchor");
      return report;
    }
    if (!verify_signature(*anchor, b.data, b.signature))
      report.add(b.block_seq, FailureKind::signature_invalid,
                 "self-signature is invalid");
    return report;
  }

  std::optional<PublicKeyRecord> key = anchor;
  if (!key) key = detail::resolve_owner_key(chain, index);
  if (!key) {
    report.add(b.block_seq, FailureKind::missing_key,
               "no PublicKey block precedes this block and no anchor given");
    return report;
  }
  if (!verify_signature(*key, b.data, b.signature))
    report.add(b.block_seq, FailureKind::signature_invalid,
               "signature does not verify under the owning key");
  return report;
}

// ---------------------------------------------------------------------------
// Persistence: JSON-lines, one block per line, chain order.
// ---------------------------------------------------------------------------

inline std::string chain_file_name(AsNumber asn) {
  return asn.tag() + ".chain.jsonl";
}

namespace detail {

inline std::string blocks_to_jsonl(const std::vector<Block>& blocks) {
  std::string out;
  for (const Block& b : blocks) {
    out += block_to_json_line(b);
    out += '\n';
  }
  return out;
}

inline std::vector<Block> blocks_from_jsonl(std::string_view text,
                                            std::string_view origin) {
  std::vector<Block> blocks;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    ++line_no;
    if (!line.empty()) {
      try {
        blocks.push_back(block_from_json_line(line));
      } catch (const ShapeError& e) {
        throw StorageError(std::string(origin) + ":" + std::to_string(line_no) +
                           ": " + e.what());
      }
    }
    pos = end + 1;
  }
  return blocks;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path,
                             std::string_view bytes) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw StorageError("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot move " + tmp + " to " + path.string());
}

}  // namespace detail

inline void write_chain_file(const Chain& chain,
                             const std::filesystem::path& path) {
  detail::write_file_bytes(path, detail::blocks_to_jsonl(chain.blocks));
}

inline Chain read_chain_file(const std::filesystem::path& path) {
  Chain chain;
  chain.blocks =
      detail::blocks_from_jsonl(detail::read_file_bytes(path), path.string());
  if (chain.blocks.empty())
    throw StorageError("chain file has no blocks: " + path.string());
  chain.asn = chain.blocks.front().asn;
  return chain;
}

}  // namespace iichain
