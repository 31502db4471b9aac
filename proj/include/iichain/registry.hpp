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

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "iichain/archive.hpp"
#include "iichain/chain.hpp"
#include "iichain/types.hpp"

namespace iichain {

// Local store of chain versions for many ASes.
//
// Layout under the registry root:
//   AS<asn>/<archive>.zip     every stored version, never modified again
//   AS<asn>/current/          unpacked copy of the newest version
//   alerts.jsonl              append-only alert log shared by all ASes

struct Registry;

struct VersionMeta {
  AsNumber asn{};
  ArchiveName name{};
  Timestamp exported_at{};
  Timestamp imported_at{};
  std::string main_tip_block_id;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["asn"] = asn.value;
    j["name"] = name.render();
    j["exported_at"] = exported_at.to_string();
    j["imported_at"] = imported_at.to_string();
    j["main_tip_block_id"] = main_tip_block_id;
    return j;
  }
};

enum class AlertStage { integrity, trust };

inline std::string_view to_string(AlertStage stage) {
  return stage == AlertStage::integrity ? "integrity" : "trust";
}

struct AlertRecord {
  Timestamp raised_at{};
  AsNumber asn{};
  std::string block_id;
  AlertStage stage = AlertStage::integrity;
  std::string detail;
  std::string version;  // archive name of the version that failed

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["raised_at"] = raised_at.to_string();
    j["asn"] = asn.value;
    j["block_id"] = block_id;
    j["stage"] = std::string(to_string(stage));
    j["detail"] = detail;
    j["version"] = version;
    return j;
  }

  static AlertRecord from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw StorageError("alert record is not a JSON object");
    for (const char* key :
         {"raised_at", "asn", "block_id", "stage", "detail", "version"}) {
      if (!j.contains(key))
        throw StorageError(std::string("alert record missing field ") + key);
    }
    AlertRecord a;
    const auto ts = Timestamp::parse(j["raised_at"].get<std::string>());
    if (!ts) throw StorageError("alert record has invalid raised_at");
    a.raised_at = *ts;
    a.asn = AsNumber{j["asn"].get<std::uint32_t>()};
    a.block_id = j["block_id"].get<std::string>();
    const std::string stage = j["stage"].get<std::string>();
    if (stage == "integrity")
      a.stage = AlertStage::integrity;
    else if (stage == "trust")
      a.stage = AlertStage::trust;
    else
      throw StorageError("alert record has unknown stage: " + stage);
    a.detail = j["detail"].get<std::string>();
    a.version = j["version"].get<std::string>();
    return a;
  }
};

using AlertSink = std::function<void(const AlertRecord&)>;

struct Registry {
  std::filesystem::path root;
  Clock clock = system_clock_utc();
  AlertSink alert_sink;  // optional extra dispatch besides the local log
};

struct Resolution {
  Block block;
  VersionMeta version;
};

namespace detail {

// Advisory exclusive lock held for the lifetime of the object. The lock file
// is created if absent and never removed; flock drops the lock at close.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw StorageError("cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw StorageError("cannot lock " + path.string());
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;
  ~FileLock() {
    if (fd_ >= 0) ::close(fd_);
  }

 private:
  int fd_ = -1;
};

inline Timestamp file_mtime(const std::filesystem::path& path) {
  struct ::stat st{};
  if (::stat(path.c_str(), &st) != 0)
    throw StorageError("cannot stat " + path.string());
  return Timestamp{static_cast<std::int64_t>(st.st_mtime)};
}

inline std::filesystem::path asn_dir(const Registry& registry, AsNumber asn) {
  return registry.root / asn.tag();
}

inline std::filesystem::path current_dir(const Registry& registry,
                                         AsNumber asn) {
  return asn_dir(registry, asn) / "current";
}

inline std::filesystem::path alerts_path(const Registry& registry) {
  return registry.root / "alerts.jsonl";
}

// Pulls the manifest tip out of a stored archive; unreadable archives yield
// an empty tip so that listing stays usable and resolution alerts on use.
inline std::string stored_tip(const std::filesystem::path& zip_path) {
  try {
    for (const ZipEntry& e : zip_read_file(zip_path)) {
      if (e.name != kManifestEntry) continue;
      const auto j = nlohmann::json::parse(e.data, nullptr, false);
      if (j.is_discarded() || !j.contains("main_tip_block_id") ||
          !j["main_tip_block_id"].is_string())
        return "";
      return j["main_tip_block_id"].get<std::string>();
    }
  } catch (const Error&) {
  }
  return "";
}

}  // namespace detail

inline std::vector<VersionMeta> list_versions(const Registry& registry,
                                              AsNumber asn) {
  std::vector<VersionMeta> versions;
  const std::filesystem::path dir = detail::asn_dir(registry, asn);
  if (!std::filesystem::is_directory(dir)) return versions;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string file_name = entry.path().filename().string();
    AsNumber named_asn{};
    Timestamp exported_at{};
    try {
      std::tie(named_asn, exported_at) = parse_archive_name(file_name);
    } catch (const MalformedNameError&) {
      continue;
    }
    if (named_asn.value != asn.value) continue;
    VersionMeta meta;
    meta.asn = asn;
    meta.name = ArchiveName{named_asn, exported_at};
    meta.exported_at = exported_at;
    meta.imported_at = detail::file_mtime(entry.path());
    meta.main_tip_block_id = detail::stored_tip(entry.path());
    versions.push_back(std::move(meta));
  }
  std::sort(versions.begin(), versions.end(),
            [](const VersionMeta& a, const VersionMeta& b) {
              return a.exported_at.secs > b.exported_at.secs;
            });
  return versions;
}

inline VersionMeta store_version(const Registry& registry,
                                 const std::filesystem::path& archive_path) {
  auto [chain, obsolete_chain, manifest] = import_archive(archive_path);
  (void)chain;
  (void)obsolete_chain;

  const std::filesystem::path dir = detail::asn_dir(registry, manifest.asn);
  std::filesystem::create_directories(dir);
  detail::FileLock lock(dir / ".lock");

  const std::string name = archive_name(manifest.asn, manifest.exported_at).render();
  const std::filesystem::path dest = dir / name;
  if (std::filesystem::exists(dest))
    throw DuplicateVersionError("version already stored: " + name);

  detail::write_file_bytes(dest, detail::read_file_bytes(archive_path));

  // Unpack into current/ only when this version is the newest stored one.
  const std::vector<VersionMeta> versions = list_versions(registry, manifest.asn);
  const bool newest =
      !versions.empty() && versions.front().name.render() == name;
  if (newest) {
    const std::filesystem::path cur = detail::current_dir(registry, manifest.asn);
    std::filesystem::create_directories(cur);
    for (const ZipEntry& e : zip_read_file(dest))
      detail::write_file_bytes(cur / e.name, e.data);
  }

  VersionMeta meta;
  meta.asn = manifest.asn;
  meta.name = ArchiveName{manifest.asn, manifest.exported_at};
  meta.exported_at = manifest.exported_at;
  meta.imported_at = detail::file_mtime(dest);
  meta.main_tip_block_id = manifest.main_tip_block_id;
  return meta;
}

inline void raise_alert(const Registry& registry, const AlertRecord& alert) {
  std::filesystem::create_directories(registry.root);
  detail::FileLock lock(registry.root / ".alerts.lock");
  std::ofstream out(detail::alerts_path(registry),
                    std::ios::binary | std::ios::app);
  if (!out) throw StorageError("cannot append to alert log");
  out << alert.to_json().dump() << '\n';
  out.flush();
  if (!out) throw StorageError("alert log write failed");
  if (registry.alert_sink) registry.alert_sink(alert);
}

inline std::vector<AlertRecord> read_alerts(const Registry& registry) {
  std::vector<AlertRecord> alerts;
  const std::filesystem::path path = detail::alerts_path(registry);
  if (!std::filesystem::exists(path)) return alerts;
  const std::string text = detail::read_file_bytes(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw StorageError("alerts.jsonl:" + std::to_string(line_no) +
                         ": invalid JSON");
    alerts.push_back(AlertRecord::from_json(j));
  }
  return alerts;
}

namespace detail {

inline std::optional<Chain> load_current_chain(const Registry& registry,
                                               AsNumber asn) {
  const std::filesystem::path path = current_dir(registry, asn) / kChainEntry;
  try {
    Chain chain;
    chain.blocks = blocks_from_jsonl(read_file_bytes(path), "current chain");
    if (chain.blocks.empty()) return std::nullopt;
    chain.asn = chain.blocks.front().asn;
    return chain;
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline std::optional<Chain> load_stored_chain(const Registry& registry,
                                              const VersionMeta& version) {
  const std::filesystem::path path =
      asn_dir(registry, version.asn) / version.name.render();
  try {
    for (const ZipEntry& e : zip_read_file(path)) {
      if (e.name != kChainEntry) continue;
      Chain chain;
      chain.blocks = blocks_from_jsonl(e.data, version.name.render());
      if (chain.blocks.empty()) return std::nullopt;
      chain.asn = chain.blocks.front().asn;
      return chain;
    }
  } catch (const Error&) {
  }
  return std::nullopt;
}

// Runs stage (a) integrity over the whole chain and, when that holds, stage
// (b) trust on the one block of interest. Failures become alerts against the
// named version; success hands the block back.
inline const Block* check_candidate(const Registry& registry, const Chain& chain,
                                    AsNumber asn, const std::string& block_id,
                                    const std::optional<PublicKeyRecord>& anchor,
                                    const std::string& version_name) {
  const auto alert = [&](AlertStage stage, std::string detail) {
    raise_alert(registry, AlertRecord{registry.clock(), asn, block_id, stage,
                                      std::move(detail), version_name});
  };
  const VerificationReport integrity = verify_chain_integrity(chain);
  if (!integrity.ok()) {
    const VerificationFailure& f = integrity.failures.front();
    alert(AlertStage::integrity,
          std::string(to_string(f.kind)) + " at seq " + f.seq + ": " + f.detail);
    return nullptr;
  }
  const VerificationReport trust = verify_block_trust(chain, block_id, anchor);
  if (!trust.ok()) {
    const VerificationFailure& f = trust.failures.front();
    alert(AlertStage::trust,
          std::string(to_string(f.kind)) + " at seq " + f.seq + ": " + f.detail);
    return nullptr;
  }
  return get_block_by_id(chain, block_id);
}

}  // namespace detail

// Resolution protocol for a block in another AS's chain: use the current
// version when it verifies; on a verification failure raise an alert and walk
// the previously stored versions newest-first until one yields a copy that
// passes both stages. Requests for obsolete blocks are refused outright.
inline Resolution resolve_block(
    const Registry& registry, AsNumber asn, const std::string& block_id,
    const std::optional<PublicKeyRecord>& anchor = std::nullopt) {
  if (!hash_hex_valid(block_id))
    throw NotFoundError("block id is not a sha-256 hex digest: " + block_id);

  const std::vector<VersionMeta> versions = list_versions(registry, asn);
  if (versions.empty())
    throw NotFoundError("no versions stored for " + asn.tag());

  bool found_anywhere = false;

  // Current version: the unpacked copy of the newest stored version.
  const VersionMeta& current = versions.front();
  const std::optional<Chain> current_chain =
      detail::load_current_chain(registry, asn);
  if (!current_chain) {
    raise_alert(registry,
                AlertRecord{registry.clock(), asn, block_id,
                            AlertStage::integrity,
                            "current version unreadable", current.name.render()});
  } else {
    if (is_obsolete(*current_chain, block_id))
      throw ObsoleteBlockError("block is obsolete in the current chain of " +
                               asn.tag() + ": " + block_id);
    if (get_block_by_id(*current_chain, block_id) != nullptr) {
      found_anywhere = true;
      const Block* ok = detail::check_candidate(registry, *current_chain, asn,
                                                block_id, anchor,
                                                current.name.render());
      if (ok) return {*ok, current};
    }
  }

  // Older versions, newest first, read from their immutable archives.
  for (std::size_t i = 1; i < versions.size(); ++i) {
    const VersionMeta& version = versions[i];
    const std::optional<Chain> chain = detail::load_stored_chain(registry, version);
    if (!chain) {
      raise_alert(registry,
                  AlertRecord{registry.clock(), asn, block_id,
                              AlertStage::integrity, "stored version unreadable",
                              version.name.render()});
      continue;
    }
    const Block* candidate = get_block_by_id(*chain, block_id);
    if (candidate == nullptr) continue;
    // A block can only genuinely belong to a version exported after it was
    // appended; later timestamps mean the copy cannot be trusted to be the
    // same block, so it is skipped rather than alerted on.
    if (candidate->timestamp.secs > version.exported_at.secs) continue;
    if (is_obsolete(*chain, block_id)) continue;
    found_anywhere = true;
    const Block* ok = detail::check_candidate(registry, *chain, asn, block_id,
                                              anchor, version.name.render());
    if (ok) return {*ok, version};
  }

  if (found_anywhere)
    throw UnresolvableError("every stored copy of block " + block_id +
                            " failed verification for " + asn.tag());
  throw NotFoundError("block " + block_id + " not found in any stored version of " +
                      asn.tag());
}

}  // namespace iichain
