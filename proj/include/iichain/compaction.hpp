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

#include <algorithm>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "iichain/chain.hpp"
#include "iichain/types.hpp"

namespace iichain {

// ---------------------------------------------------------------------------
// ObsoleteChain: the per-ASN chain that receives blocks removed from the
// main chain. Structurally a chain like any other (own Genesis, hash-linked);
// migrated blocks carry hyphenated labels `<original_seq>-<migration_no>`
// whose suffixes strictly increase.
// ---------------------------------------------------------------------------

struct ObsoleteChain {
  AsNumber asn{};
  std::vector<Block> blocks;
};

inline ObsoleteChain create_obsolete_chain(AsNumber asn,
                                           const Clock& clock = system_clock_utc()) {
  if (!asn.valid()) throw ShapeError("invalid asn");
  ObsoleteChain chain;
  chain.asn = asn;
  chain.blocks.push_back(build_block(
      asn, "1", std::string(kGenesisType),
      "IIBlockchain ObsoleteChain Genesis for " + asn.tag(),
      /*signature=*/"", /*previous=*/"", /*obsoletes=*/"", clock()));
  return chain;
}

inline VerificationReport verify_chain_integrity(const ObsoleteChain& chain) {
  return detail::verify_linked_blocks(chain.asn, chain.blocks,
                                      detail::SeqRule::obsolete_chain);
}

// `<original_seq>-<n+1>` where n = migrated blocks already present.
inline std::string obsolete_seq_label(const std::string& original_seq,
                                      const ObsoleteChain& obsolete_chain) {
  if (!seq_label_plain(original_seq))
    throw InvalidLabelError("already hyphenated or malformed label: '" +
                            original_seq + "'");
  const std::size_t migrated =
      obsolete_chain.blocks.empty() ? 0 : obsolete_chain.blocks.size() - 1;
  return original_seq + "-" + std::to_string(migrated + 1);
}

// Finds a migrated block by the integer label it carried on the main chain.
// Dangling obsoletes_block_id references left behind by compaction resolve
// here. Returns the most recent migration when the label was reused.
inline const Block* find_migrated_by_original_seq(const ObsoleteChain& chain,
                                                  std::uint64_t original_seq) {
  const Block* found = nullptr;
  for (const Block& b : chain.blocks) {
    const auto parts = seq_label_parts(b.block_seq);
    if (parts && parts->first == original_seq) found = &b;
  }
  return found;
}

// ---------------------------------------------------------------------------
// Removal and compaction.
// ---------------------------------------------------------------------------

// Moves one obsolete block out of the main chain and into the obsolete chain.
//
// Main-chain repair: the successor's previous_block_id is redirected to the
// removed block's predecessor, then every following block is re-hashed in
// order. Re-hashing changes those blocks' ids, so obsoletes_block_id
// references pointing at a re-hashed survivor are rewritten to the new id;
// otherwise a later removal could no longer see its target as obsolete.
// References to the removed block itself are left dangling; the obsolete
// chain resolves them by original label.
//
// The migrated block keeps its asn, timestamp, type, data, signature and
// obsoletes reference; only block_seq, previous_block_id and block_id change.
inline void remove_obsolete_block(Chain& chain, ObsoleteChain& obsolete_chain,
                                  const std::string& block_id) {
  if (chain.asn != obsolete_chain.asn)
    throw ShapeError("chain and obsolete chain belong to different ASNs");
  std::size_t index = chain.blocks.size();
  for (std::size_t i = 0; i < chain.blocks.size(); ++i) {
    if (chain.blocks[i].block_id == block_id) {
      index = i;
      break;
    }
  }
  if (index == chain.blocks.size())
    throw NotFoundError("block not in chain: " + block_id);
  if (index == 0)
    throw ProtectedBlockError("Genesis block cannot be removed");
  if (!is_obsolete(chain, block_id))
    throw NotObsoleteError("block " + chain.blocks[index].block_seq +
                           " is not obsolete");
  if (obsolete_chain.blocks.empty())
    throw NoGenesisError("obsolete chain has no Genesis block");

  Block removed = chain.blocks[index];

  std::unordered_map<std::string, std::string> rehashed;
  for (std::size_t i = index + 1; i < chain.blocks.size(); ++i) {
    Block& b = chain.blocks[i];
    b.previous_block_id = (i == index + 1) ? removed.previous_block_id
                                           : chain.blocks[i - 1].block_id;
    if (!b.obsoletes_block_id.empty()) {
      const auto it = rehashed.find(b.obsoletes_block_id);
      if (it != rehashed.end()) b.obsoletes_block_id = it->second;
    }
    std::string old_id = std::move(b.block_id);
    b.block_id = compute_block_id(b);
    rehashed.emplace(std::move(old_id), b.block_id);
  }
  chain.blocks.erase(chain.blocks.begin() + static_cast<std::ptrdiff_t>(index));

  removed.block_seq = obsolete_seq_label(removed.block_seq, obsolete_chain);
  removed.previous_block_id = obsolete_chain.blocks.back().block_id;
  removed.block_id = compute_block_id(removed);
  obsolete_chain.blocks.push_back(std::move(removed));
}

// Migrates every obsolete block, ascending by sequence label. Returns the
// number of blocks moved; zero on an already-compact chain (idempotent).
inline std::size_t compact(Chain& chain, ObsoleteChain& obsolete_chain) {
  std::vector<std::uint64_t> victims;
  {
    const auto obsoleted = detail::obsoleted_ids(chain.blocks);
    for (const Block& b : chain.blocks) {
      if (!b.is_genesis() && obsoleted.contains(b.block_id)) {
        const auto n = seq_label_int(b.block_seq);
        if (!n)
          throw ShapeError("main-chain block has non-integer label '" +
                           b.block_seq + "'");
        victims.push_back(*n);
      }
    }
  }
  std::sort(victims.begin(), victims.end());

  for (const std::uint64_t seq : victims) {
    // Re-hashing during earlier removals may have changed ids, so the victim
    // is re-located by its (stable) label right before removal.
    const Block* target = nullptr;
    for (const Block& b : chain.blocks) {
      const auto n = seq_label_int(b.block_seq);
      if (n && *n == seq) {
        target = &b;
        break;
      }
    }
    if (target == nullptr) continue;
    remove_obsolete_block(chain, obsolete_chain, target->block_id);
  }
  return victims.size();
}

// ---------------------------------------------------------------------------
// Persistence: `AS<asn>.obsolete.jsonl`, same line format as the main chain.
// ---------------------------------------------------------------------------

inline std::string obsolete_chain_file_name(AsNumber asn) {
  return asn.tag() + ".obsolete.jsonl";
}

inline void write_obsolete_chain_file(const ObsoleteChain& chain,
                                      const std::filesystem::path& path) {
  detail::write_file_bytes(path, detail::blocks_to_jsonl(chain.blocks));
}

inline ObsoleteChain read_obsolete_chain_file(const std::filesystem::path& path) {
  ObsoleteChain chain;
  chain.blocks =
      detail::blocks_from_jsonl(detail::read_file_bytes(path), path.string());
  if (chain.blocks.empty())
    throw StorageError("obsolete chain file has no blocks: " + path.string());
  chain.asn = chain.blocks.front().asn;
  return chain;
}

}  // namespace iichain
