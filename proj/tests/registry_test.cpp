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

#include "iichain/registry.hpp"

#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "iichain/compaction.hpp"
#include "test_util.hpp"

namespace {

using iichain::AlertRecord;
using iichain::AlertStage;
using iichain::AsNumber;
using iichain::Block;
using iichain::DuplicateVersionError;
using iichain::export_chains;
using iichain::fixed_clock;
using iichain::list_versions;
using iichain::NotFoundError;
using iichain::ObsoleteBlockError;
using iichain::raise_alert;
using iichain::read_alerts;
using iichain::Registry;
using iichain::resolve_block;
using iichain::Resolution;
using iichain::store_version;
using iichain::Timestamp;
using iichain::UnresolvableError;
using iichain::VersionMeta;
using testutil::kExampleAsn;
using testutil::kT0;
using testutil::TempDir;

const Timestamp kAlertTime{kT0 + 9000};

Registry make_registry(const TempDir& dir) {
  return Registry{dir.path() / "registry", fixed_clock(kAlertTime), nullptr};
}

// Exports the given chain pair into a scratch directory and returns the
// archive path; the scratch directory lives as long as the TempDir.
std::filesystem::path export_to(const TempDir& dir, const std::string& sub,
                                const iichain::Chain& chain,
                                const iichain::ObsoleteChain& obsolete,
                                std::int64_t at) {
  return export_chains(chain, obsolete, dir.path() / sub,
                       fixed_clock(Timestamp{at}));
}

std::string current_chain_text(const Registry& reg, AsNumber asn) {
  return testutil::read_text(reg.root / asn.tag() / "current" / "chain.jsonl");
}

// ---------------------------------------------------------------------------
// Storing versions.
// ---------------------------------------------------------------------------

TEST(StoreVersion, UnpacksNewestIntoCurrent) {
  TempDir dir;
  Registry reg = make_registry(dir);
  auto ex = testutil::make_example_chain();

  const auto v1 = export_to(dir, "x1", ex.chain, ex.obsolete, kT0 + 3600);
  const VersionMeta meta = store_version(reg, v1);
  EXPECT_EQ(meta.asn, kExampleAsn);
  EXPECT_EQ(meta.exported_at.secs, kT0 + 3600);
  EXPECT_EQ(meta.main_tip_block_id, ex.chain.blocks.back().block_id);

  // The archive is stored verbatim and unpacked into current/.
  EXPECT_TRUE(std::filesystem::exists(reg.root / "AS18782" / meta.name.render()));
  for (const char* f : {"manifest.json", "chain.jsonl", "obsolete.jsonl"})
    EXPECT_TRUE(
        std::filesystem::exists(reg.root / "AS18782" / "current" / f))
        << f;
  EXPECT_NE(current_chain_text(reg, kExampleAsn)
                .find(ex.chain.blocks.back().block_id),
            std::string::npos);

  // A newer version replaces the current copy.
  iichain::compact(ex.chain, ex.obsolete);
  const auto v2 = export_to(dir, "x2", ex.chain, ex.obsolete, kT0 + 7200);
  store_version(reg, v2);
  const auto versions = list_versions(reg, kExampleAsn);
  ASSERT_EQ(versions.size(), 2u);
  EXPECT_EQ(versions[0].exported_at.secs, kT0 + 7200);
  EXPECT_EQ(versions[1].exported_at.secs, kT0 + 3600);
  // Current now reflects the compacted chain: three blocks, no label 3.
  const std::string cur = current_chain_text(reg, kExampleAsn);
  EXPECT_EQ(std::count(cur.begin(), cur.end(), '\n'), 3);
  EXPECT_EQ(cur.find("\"block_seq\":\"3\""), std::string::npos);
}

TEST(StoreVersion, OlderVersionDoesNotTouchCurrent) {
  TempDir dir;
  Registry reg = make_registry(dir);
  auto ex = testutil::make_example_chain();

  const auto old_archive = export_to(dir, "x1", ex.chain, ex.obsolete, kT0 + 3600);
  iichain::compact(ex.chain, ex.obsolete);
  const auto new_archive = export_to(dir, "x2", ex.chain, ex.obsolete, kT0 + 7200);

  store_version(reg, new_archive);
  const std::string before = current_chain_text(reg, kExampleAsn);
  store_version(reg, old_archive);
  EXPECT_EQ(current_chain_text(reg, kExampleAsn), before);
  EXPECT_EQ(list_versions(reg, kExampleAsn).size(), 2u);
}

TEST(StoreVersion, DuplicateIsRejected) {
  TempDir dir;
  Registry reg = make_registry(dir);
  auto ex = testutil::make_example_chain();
  const auto v1 = export_to(dir, "x1", ex.chain, ex.obsolete, kT0 + 3600);
  store_version(reg, v1);
  EXPECT_THROW(store_version(reg, v1), DuplicateVersionError);
  // A copy of the same archive from elsewhere is still the same version.
  const auto copy = dir.path() / "copy" / v1.filename();
  std::filesystem::create_directories(copy.parent_path());
  std::filesystem::copy_file(v1, copy);
  EXPECT_THROW(store_version(reg, copy), DuplicateVersionError);
}

TEST(ListVersions, EmptyForUnknownAs) {
  TempDir dir;
  Registry reg = make_registry(dir);
  EXPECT_TRUE(list_versions(reg, kExampleAsn).empty());
  EXPECT_TRUE(list_versions(reg, AsNumber{424242}).empty());
}

// ---------------------------------------------------------------------------
// Alert log.
// ---------------------------------------------------------------------------

TEST(Alerts, AppendReadBackAndSink) {
  TempDir dir;
  Registry reg = make_registry(dir);
  std::vector<AlertRecord> seen;
  reg.alert_sink = [&seen](const AlertRecord& a) { seen.push_back(a); };

  EXPECT_TRUE(read_alerts(reg).empty());

  AlertRecord first{kAlertTime, kExampleAsn, std::string(64, 'a'),
                    AlertStage::integrity, "hash-mismatch at seq 4: boom",
                    "AS18782V20180212163000.zip"};
  AlertRecord second{Timestamp{kT0 + 9060}, kExampleAsn, std::string(64, 'b'),
                     AlertStage::trust, "bad-signature at seq 4: nope",
                     "AS18782V20180212163000.zip"};
  raise_alert(reg, first);
  raise_alert(reg, second);

  const auto alerts = read_alerts(reg);
  ASSERT_EQ(alerts.size(), 2u);
  EXPECT_EQ(alerts[0].raised_at, first.raised_at);
  EXPECT_EQ(alerts[0].stage, AlertStage::integrity);
  EXPECT_EQ(alerts[0].detail, first.detail);
  EXPECT_EQ(alerts[0].version, first.version);
  EXPECT_EQ(alerts[1].stage, AlertStage::trust);
  EXPECT_EQ(alerts[1].block_id, second.block_id);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[1].detail, second.detail);

  // The log is line-oriented JSON with a fixed key order.
  const std::string raw = testutil::read_text(reg.root / "alerts.jsonl");
  const auto line_end = raw.find('\n');
  const auto j = nlohmann::ordered_json::parse(raw.substr(0, line_end));
  std::vector<std::string> keys;
  for (const auto& item : j.items()) keys.push_back(item.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"raised_at", "asn", "block_id",
                                            "stage", "detail", "version"}));
}

TEST(Alerts, MalformedLogLineIsReported) {
  TempDir dir;
  Registry reg = make_registry(dir);
  raise_alert(reg, AlertRecord{kAlertTime, kExampleAsn, std::string(64, 'a'),
                               AlertStage::integrity, "d", "v"});
  std::ofstream(reg.root / "alerts.jsonl", std::ios::app) << "not json\n";
  try {
    read_alerts(reg);
    FAIL() << "expected StorageError";
  } catch (const iichain::StorageError& e) {
    EXPECT_NE(std::string(e.what()).find("alerts.jsonl:2"), std::string::npos)
        << e.what();
  }
}

// ---------------------------------------------------------------------------
// Resolution protocol.
// ---------------------------------------------------------------------------

TEST(Resolve, HealthyCurrentReturnsBlockWithoutAlerts) {
  TempDir dir;
  Registry reg = make_registry(dir);
  auto ex = testutil::make_example_chain();
  store_version(reg, export_to(dir, "x1", ex.chain, ex.obsolete, kT0 + 3600));

  const Block& b4 = ex.chain.blocks[3];
  const Resolution res = resolve_block(reg, kExampleAsn, b4.block_id);
  EXPECT_EQ(res.block, b4);
  EXPECT_EQ(res.version.name.render(), "AS18782V20180212163000.zip");
  EXPECT_TRUE(read_alerts(reg).empty());
}

TEST(Resolve, ObsoleteBlockIsRefused) {
  TempDir dir;
  auto ex = testutil::make_example_chain();
  const std::string b3_id = ex.chain.blocks[2].block_id;

  // Obsolete and still present in the current chain.
  {
    Registry reg{dir.path() / "r1", fixed_clock(kAlertTime), nullptr};
    store_version(reg, export_to(dir, "x1", ex.chain, ex.obsolete, kT0 + 3600));
    EXPECT_THROW(resolve_block(reg, kExampleAsn, b3_id), ObsoleteBlockError);
    EXPECT_TRUE(read_alerts(reg).empty());
  }
  // Obsolete and already compacted away: the surviving block's supersession
  // reference still marks the id as obsolete.
  {
    Registry reg{dir.path() / "r2", fixed_clock(kAlertTime), nullptr};
    iichain::compact(ex.chain, ex.obsolete);
    store_version(reg, export_to(dir, "x2", ex.chain, ex.obsolete, kT0 + 7200));
    EXPECT_THROW(resolve_block(reg, kExampleAsn, b3_id), ObsoleteBlockError);
    EXPECT_TRUE(read_alerts(reg).empty());
  }
}

TEST(Resolve, UnknownBlocksAndAsesAreNotFound) {
  TempDir dir;
  Registry reg = make_registry(dir);
  auto ex = testutil::make_example_chain();
  store_version(reg, export_to(dir, "x1", ex.chain, ex.obsolete, kT0 + 3600));

  EXPECT_THROW(resolve_block(reg, kExampleAsn, std::string(64, 'f')),
               NotFoundError);
  EXPECT_THROW(resolve_block(reg, kExampleAsn, "not-hex"), NotFoundError);
  EXPECT_THROW(resolve_block(reg, AsNumber{31337}, std::string(64, 'f')),
               NotFoundError);
  EXPECT_TRUE(read_alerts(reg).empty());
}

// Edits the data field of one block inside the unpacked current chain while
// keeping the file parseable; only verification can notice.
void tamper_current(const Registry& reg, AsNumber asn,
                    const std::string& needle, const std::string& repl) {
  const auto path = reg.root / asn.tag() / "current" / "chain.jsonl";
  std::string text = testutil::read_text(path);
  const auto pos = text.find(needle);
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, needle.size(), repl);
  testutil::write_text(path, text);
}

TEST(Resolve, TamperedCurrentAlertsOnceAndFallsBack) {
  TempDir dir;
  Registry reg = make_registry(dir);
  auto ex = testutil::make_example_chain();
  const Block b4 = ex.chain.blocks[3];

  store_version(reg, export_to(dir, "x1", ex.chain, ex.obsolete, kT0 + 3600));
  iichain::append_block(ex.chain, "irr_route", "r1",
                        iichain::sign_data(ex.keypair, "r1"), "",
                        fixed_clock(Timestamp{kT0 + 4000}));
  store_version(reg, export_to(dir, "x2", ex.chain, ex.obsolete, kT0 + 7200));

  tamper_current(reg, kExampleAsn, "noc@as18782", "NOC@as18782");

  const Resolution res = resolve_block(reg, kExampleAsn, b4.block_id);
  EXPECT_EQ(res.block, b4);
  EXPECT_EQ(res.version.name.render(), "AS18782V20180212163000.zip");

  const auto alerts = read_alerts(reg);
  ASSERT_EQ(alerts.size(), 1u);
  EXPECT_EQ(alerts[0].stage, AlertStage::integrity);
  EXPECT_EQ(alerts[0].asn, kExampleAsn);
  EXPECT_EQ(alerts[0].block_id, b4.block_id);
  EXPECT_EQ(alerts[0].version, "AS18782V20180212173000.zip");
  EXPECT_NE(alerts[0].detail.find("hash-mismatch"), std::string::npos);
  EXPECT_EQ(alerts[0].raised_at, kAlertTime);
}

TEST(Resolve, UnreadableCurrentAlertsAndFallsBack) {
  TempDir dir;
  Registry reg = make_registry(dir);
  auto ex = testutil::make_example_chain();
  const Block b4 = ex.chain.blocks[3];
  store_version(reg, export_to(dir, "x1", ex.chain, ex.obsolete, kT0 + 3600));
  store_version(reg, export_to(dir, "x2", ex.chain, ex.obsolete, kT0 + 7200));

  testutil::write_text(reg.root / "AS18782" / "current" / "chain.jsonl",
                       "{ truncated garbage");

  const Resolution res = resolve_block(reg, kExampleAsn, b4.block_id);
  EXPECT_EQ(res.block, b4);
  EXPECT_EQ(res.version.name.render(), "AS18782V20180212163000.zip");
  const auto alerts = read_alerts(reg);
  ASSERT_EQ(alerts.size(), 1u);
  EXPECT_EQ(alerts[0].detail, "current version unreadable");
  EXPECT_EQ(alerts[0].version, "AS18782V20180212173000.zip");
}

TEST(Resolve, UnresolvableWhenEveryCopyFails) {
  TempDir dir;
  Registry reg = make_registry(dir);
  auto ex = testutil::make_example_chain();
  store_version(reg, export_to(dir, "x1", ex.chain, ex.obsolete, kT0 + 3600));
  // Block 5 exists only in the second version.
  const Block b5 = iichain::append_block(ex.chain, "irr_route", "r1",
                                         iichain::sign_data(ex.keypair, "r1"),
                                         "", fixed_clock(Timestamp{kT0 + 4000}));
  store_version(reg, export_to(dir, "x2", ex.chain, ex.obsolete, kT0 + 7200));

  tamper_current(reg, kExampleAsn, "\"data\":\"r1\"", "\"data\":\"rX\"");

  EXPECT_THROW(resolve_block(reg, kExampleAsn, b5.block_id), UnresolvableError);
  const auto alerts = read_alerts(reg);
  ASSERT_EQ(alerts.size(), 1u);
  EXPECT_EQ(alerts[0].stage, AlertStage::integrity);
}

TEST(Resolve, CopyNewerThanItsVersionIsSilentlySkipped) {
  TempDir dir;
  Registry reg = make_registry(dir);
  auto ex = testutil::make_example_chain();
  const Block b4 = ex.chain.blocks[3];

  // This export claims a time before blocks 3 and 4 were appended, so its
  // copies of them fail the timestamp-consistency rule.
  store_version(reg, export_to(dir, "x0", ex.chain, ex.obsolete, kT0 + 60));
  store_version(reg, export_to(dir, "x1", ex.chain, ex.obsolete, kT0 + 3600));

  tamper_current(reg, kExampleAsn, "noc@as18782", "NOC@as18782");

  // Fallback finds block 4 in the older version but must not use it: the
  // copy is newer than that version's export time. One alert, no result.
  EXPECT_THROW(resolve_block(reg, kExampleAsn, b4.block_id), UnresolvableError);
  ASSERT_EQ(read_alerts(reg).size(), 1u);
}

TEST(Resolve, ObsoleteInOlderVersionIsSilentlySkipped) {
  TempDir dir;
  Registry reg = make_registry(dir);
  auto ex = testutil::make_example_chain();
  const std::string b3_id = ex.chain.blocks[2].block_id;
  store_version(reg, export_to(dir, "x1", ex.chain, ex.obsolete, kT0 + 3600));

  // Obsolete block 4 as well, then compact both away. The current chain no
  // longer mentions block 3 at all; only the older version still has it,
  // marked obsolete there.
  iichain::append_block(ex.chain, "irr_mntner", testutil::kMntnerV2,
                        iichain::sign_data(ex.keypair, testutil::kMntnerV2),
                        ex.chain.blocks[3].block_id,
                        fixed_clock(Timestamp{kT0 + 4000}));
  iichain::compact(ex.chain, ex.obsolete);
  store_version(reg, export_to(dir, "x2", ex.chain, ex.obsolete, kT0 + 7200));

  EXPECT_THROW(resolve_block(reg, kExampleAsn, b3_id), NotFoundError);
  EXPECT_TRUE(read_alerts(reg).empty());
}

TEST(Resolve, PinnedAnchorFailuresAlertAsTrust) {
  TempDir dir;
  Registry reg = make_registry(dir);
  auto ex = testutil::make_example_chain();
  const Block b4 = ex.chain.blocks[3];
  store_version(reg, export_to(dir, "x1", ex.chain, ex.obsolete, kT0 + 3600));
  store_version(reg, export_to(dir, "x2", ex.chain, ex.obsolete, kT0 + 7200));

  const iichain::KeyPair stranger = iichain::generate_keypair(kExampleAsn);
  EXPECT_THROW(resolve_block(reg, kExampleAsn, b4.block_id, stranger.pub),
               UnresolvableError);
  // Both the current version and the stored fallback fail stage (b).
  const auto alerts = read_alerts(reg);
  ASSERT_EQ(alerts.size(), 2u);
  EXPECT_EQ(alerts[0].stage, AlertStage::trust);
  EXPECT_EQ(alerts[1].stage, AlertStage::trust);
  EXPECT_EQ(alerts[0].version, "AS18782V20180212173000.zip");
  EXPECT_EQ(alerts[1].version, "AS18782V20180212163000.zip");

  // The matching anchor resolves cleanly.
  const Resolution res =
      resolve_block(reg, kExampleAsn, b4.block_id, ex.keypair.pub);
  EXPECT_EQ(res.block, b4);
}

}  // namespace
