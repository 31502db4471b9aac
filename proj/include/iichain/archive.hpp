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
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <tuple>
#include <utility>

#include <nlohmann/json.hpp>

#include "iichain/chain.hpp"
#include "iichain/compaction.hpp"
#include "iichain/types.hpp"
#include "iichain/zip.hpp"

namespace iichain {

// A chain pair travels between ASes as a ZIP named AS<asn>V<yyyymmddhhmmss>.zip
// holding exactly three entries: manifest.json, chain.jsonl, obsolete.jsonl.

inline constexpr int kArchiveFormatVersion = 1;
inline constexpr std::string_view kManifestEntry = "manifest.json";
inline constexpr std::string_view kChainEntry = "chain.jsonl";
inline constexpr std::string_view kObsoleteEntry = "obsolete.jsonl";

struct ArchiveName {
  AsNumber asn{};
  Timestamp exported_at{};

  std::string render() const {
    return asn.tag() + "V" + exported_at.to_compact() + ".zip";
  }

  friend bool operator==(const ArchiveName&, const ArchiveName&) = default;
};

inline ArchiveName archive_name(AsNumber asn, Timestamp at) {
  return ArchiveName{asn, at};
}

inline std::pair<AsNumber, Timestamp> parse_archive_name(
    const std::string& name) {
  static const std::regex pattern(R"(^AS([0-9]+)V([0-9]{14})\.zip$)");
  std::smatch m;
  if (!std::regex_match(name, m, pattern))
    throw MalformedNameError("archive name does not match AS<asn>V<yyyymmddhhmmss>.zip: " +
                             name);
  std::uint64_t asn_value = 0;
  try {
    asn_value = std::stoull(m[1].str());
  } catch (const std::exception&) {
    throw MalformedNameError("archive name has unusable AS number: " + name);
  }
  AsNumber asn{static_cast<std::uint32_t>(asn_value)};
  if (asn_value > 0xffffffffull || !asn.valid())
    throw MalformedNameError("archive name has out-of-range AS number: " + name);
  const std::optional<Timestamp> ts = Timestamp::parse_compact(m[2].str());
  if (!ts)
    throw MalformedNameError("archive name has invalid timestamp digits: " + name);
  return {asn, *ts};
}

struct ArchiveManifest {
  AsNumber asn{};
  Timestamp exported_at{};
  std::uint64_t main_chain_length = 0;
  std::uint64_t obsolete_chain_length = 0;
  std::string main_tip_block_id;
  int format_version = kArchiveFormatVersion;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["asn"] = asn.value;
    j["exported_at"] = exported_at.to_string();
    j["main_chain_length"] = main_chain_length;
    j["obsolete_chain_length"] = obsolete_chain_length;
    j["main_tip_block_id"] = main_tip_block_id;
    j["format_version"] = format_version;
    return j;
  }

  static ArchiveManifest from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ImportError("manifest.json is not a JSON object");
    for (const char* key :
         {"asn", "exported_at", "main_chain_length", "obsolete_chain_length",
          "main_tip_block_id", "format_version"}) {
      if (!j.contains(key))
        throw ImportError(std::string("manifest.json missing field ") + key);
    }
    ArchiveManifest m;
    if (!j["asn"].is_number_unsigned() || j["asn"].get<std::uint64_t>() == 0 ||
        j["asn"].get<std::uint64_t>() > 0xffffffffull)
      throw ImportError("manifest.json has invalid asn");
    m.asn = AsNumber{j["asn"].get<std::uint32_t>()};
    if (!j["exported_at"].is_string())
      throw ImportError("manifest.json exported_at is not a string");
    const auto ts = Timestamp::parse(j["exported_at"].get<std::string>());
    if (!ts) throw ImportError("manifest.json exported_at is not a valid timestamp");
    m.exported_at = *ts;
    if (!j["main_chain_length"].is_number_unsigned() ||
        !j["obsolete_chain_length"].is_number_unsigned())
      throw ImportError("manifest.json chain lengths must be unsigned integers");
    m.main_chain_length = j["main_chain_length"].get<std::uint64_t>();
    m.obsolete_chain_length = j["obsolete_chain_length"].get<std::uint64_t>();
    if (!j["main_tip_block_id"].is_string())
      throw ImportError("manifest.json main_tip_block_id is not a string");
    m.main_tip_block_id = j["main_tip_block_id"].get<std::string>();
    if (!hash_hex_valid(m.main_tip_block_id))
      throw ImportError("manifest.json main_tip_block_id is not a sha-256 hex digest");
    if (!j["format_version"].is_number_integer())
      throw ImportError("manifest.json format_version is not an integer");
    m.format_version = j["format_version"].get<int>();
    if (m.format_version != kArchiveFormatVersion)
      throw ImportError("unsupported archive format_version " +
                        std::to_string(m.format_version));
    return m;
  }
};

inline std::filesystem::path export_chains(const Chain& chain,
                                           const ObsoleteChain& obsolete_chain,
                                           const std::filesystem::path& dest_dir,
                                           const Clock& clock = system_clock_utc()) {
  if (chain.asn.value != obsolete_chain.asn.value)
    throw ExportError("chain pair disagrees on AS number: " + chain.asn.tag() +
                      " vs " + obsolete_chain.asn.tag());
  if (const auto report = verify_chain_integrity(chain); !report.ok())
    throw ExportError("refusing to export: main chain fails integrity (" +
                      report.failures.front().detail + ")");
  if (const auto report = verify_chain_integrity(obsolete_chain); !report.ok())
    throw ExportError("refusing to export: obsolete chain fails integrity (" +
                      report.failures.front().detail + ")");

  const Timestamp now = clock();
  const ArchiveName name = archive_name(chain.asn, now);

  ArchiveManifest manifest;
  manifest.asn = chain.asn;
  manifest.exported_at = now;
  manifest.main_chain_length = chain.blocks.size();
  manifest.obsolete_chain_length = obsolete_chain.blocks.size();
  manifest.main_tip_block_id = chain.blocks.back().block_id;

  std::vector<ZipEntry> entries;
  entries.push_back({std::string(kManifestEntry), manifest.to_json().dump() + "\n"});
  entries.push_back({std::string(kChainEntry), detail::blocks_to_jsonl(chain.blocks)});
  entries.push_back(
      {std::string(kObsoleteEntry), detail::blocks_to_jsonl(obsolete_chain.blocks)});

  std::filesystem::create_directories(dest_dir);
  const std::filesystem::path out = dest_dir / name.render();
  if (std::filesystem::exists(out))
    throw ExportError("archive already exists: " + out.string());
  zip_write_file(out, entries, now);
  return out;
}

inline std::tuple<Chain, ObsoleteChain, ArchiveManifest> import_archive(
    const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ImportError("archive not found: " + path.string());

  AsNumber name_asn{};
  Timestamp name_exported_at{};
  try {
    std::tie(name_asn, name_exported_at) =
        parse_archive_name(path.filename().string());
  } catch (const MalformedNameError& e) {
    throw ImportError(e.what());
  }

  std::vector<ZipEntry> entries;
  try {
    entries = zip_read_file(path);
  } catch (const ZipError& e) {
    throw ImportError("unreadable archive " + path.filename().string() + ": " +
                      e.what());
  } catch (const StorageError& e) {
    throw ImportError(e.what());
  }

  const std::string* manifest_text = nullptr;
  const std::string* chain_text = nullptr;
  const std::string* obsolete_text = nullptr;
  for (const ZipEntry& e : entries) {
    if (e.name == kManifestEntry)
      manifest_text = &e.data;
    else if (e.name == kChainEntry)
      chain_text = &e.data;
    else if (e.name == kObsoleteEntry)
      obsolete_text = &e.data;
    else
      throw ImportError("unexpected archive entry: " + e.name);
  }
  if (!manifest_text) throw ImportError("archive missing entry manifest.json");
  if (!chain_text) throw ImportError("archive missing entry chain.jsonl");
  if (!obsolete_text) throw ImportError("archive missing entry obsolete.jsonl");

  const nlohmann::json manifest_json =
      nlohmann::json::parse(*manifest_text, nullptr, false);
  if (manifest_json.is_discarded())
    throw ImportError("manifest.json is not valid JSON");
  const ArchiveManifest manifest = ArchiveManifest::from_json(manifest_json);

  if (manifest.asn.value != name_asn.value)
    throw ImportError("archive name says " + name_asn.tag() +
                      " but manifest says " + manifest.asn.tag());
  if (manifest.exported_at.secs != name_exported_at.secs)
    throw ImportError("archive name timestamp disagrees with manifest exported_at");

  Chain chain;
  ObsoleteChain obsolete_chain;
  try {
    chain.blocks = detail::blocks_from_jsonl(*chain_text, "chain.jsonl");
    obsolete_chain.blocks =
        detail::blocks_from_jsonl(*obsolete_text, "obsolete.jsonl");
  } catch (const Error& e) {
    throw ImportError(std::string("archive entry unreadable: ") + e.what());
  }
  if (chain.blocks.empty())
    throw ImportError("chain.jsonl holds no blocks");
  chain.asn = chain.blocks.front().asn;
  if (obsolete_chain.blocks.empty())
    throw ImportError("obsolete.jsonl holds no blocks");
  obsolete_chain.asn = obsolete_chain.blocks.front().asn;

  if (chain.asn.value != manifest.asn.value)
    throw ImportError("chain.jsonl AS number disagrees with manifest");
  if (obsolete_chain.asn.value != manifest.asn.value)
    throw ImportError("obsolete.jsonl AS number disagrees with manifest");
  if (chain.blocks.size() != manifest.main_chain_length)
    throw ImportError("manifest main_chain_length " +
                      std::to_string(manifest.main_chain_length) +
                      " does not match chain.jsonl (" +
                      std::to_string(chain.blocks.size()) + " blocks)");
  if (obsolete_chain.blocks.size() != manifest.obsolete_chain_length)
    throw ImportError("manifest obsolete_chain_length " +
                      std::to_string(manifest.obsolete_chain_length) +
                      " does not match obsolete.jsonl (" +
                      std::to_string(obsolete_chain.blocks.size()) + " blocks)");
  if (chain.blocks.back().block_id != manifest.main_tip_block_id)
    throw ImportError("manifest main_tip_block_id does not match chain tip");

  if (const auto report = verify_chain_integrity(chain); !report.ok())
    throw ImportError("main chain fails integrity: " +
                      report.failures.front().detail);
  if (const auto report = verify_chain_integrity(obsolete_chain); !report.ok())
    throw ImportError("obsolete chain fails integrity: " +
                      report.failures.front().detail);

  return {std::move(chain), std::move(obsolete_chain), manifest};
}

}  // namespace iichain
