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

#include "iichain/chain.hpp"

#include <algorithm>
#include <string>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace {

using iichain::append_block;
using iichain::AsNumber;
using iichain::Block;
using iichain::Chain;
using iichain::ClockError;
using iichain::compute_block_id;
using iichain::create_chain;
using iichain::FailureKind;
using iichain::fixed_clock;
using iichain::get_block;
using iichain::get_block_by_id;
using iichain::get_block_by_seq;
using iichain::is_obsolete;
using iichain::latest_of_type;
using iichain::NoGenesisError;
using iichain::ObsoletesRefError;
using iichain::publish_public_key;
using iichain::sign_data;
using iichain::Timestamp;
using iichain::VerificationReport;
using iichain::verify_block_trust;
using iichain::verify_chain_integrity;
using testutil::kT0;

bool has_kind(const VerificationReport& report, FailureKind kind) {
  return std::any_of(report.failures.begin(), report.failures.end(),
                     [&](const auto& f) { return f.kind == kind; });
}

TEST(CreateChain, GenesisShape) {
  const Chain chain = create_chain(AsNumber{18782}, fixed_clock(Timestamp{kT0}));
  ASSERT_EQ(chain.blocks.size(), 1u);
  const Block& g = chain.blocks.front();
  EXPECT_EQ(g.block_seq, "1");
  EXPECT_EQ(g.block_type, "Genesis");
  EXPECT_TRUE(g.previous_block_id.empty());
  EXPECT_TRUE(g.obsoletes_block_id.empty());
  EXPECT_TRUE(g.signature.empty());
  EXPECT_NE(g.data.find("AS18782"), std::string::npos);
  EXPECT_NE(g.data.find("2018-02-12T15:30:00Z"), std::string::npos);
  EXPECT_EQ(g.block_id, compute_block_id(g));
  EXPECT_TRUE(verify_chain_integrity(chain).ok());
}

TEST(AppendBlock, LinksAndIncrementsSeq) {
  Chain chain = create_chain(AsNumber{100}, fixed_clock(Timestamp{kT0}));
  const Block& b2 = append_block(chain, "irr_route", "r1", "", "",
                                 fixed_clock(Timestamp{kT0 + 1}));
  EXPECT_EQ(b2.block_seq, "2");
  EXPECT_EQ(b2.previous_block_id, chain.blocks[0].block_id);
  const Block& b3 = append_block(chain, "irr_route", "r2", "", "",
                                 fixed_clock(Timestamp{kT0 + 2}));
  EXPECT_EQ(b3.block_seq, "3");
  EXPECT_EQ(b3.previous_block_id, chain.blocks[1].block_id);
  EXPECT_TRUE(verify_chain_integrity(chain).ok());
}

TEST(AppendBlock, RefusesEmptyChainAndBackwardsClock) {
  Chain empty;
  empty.asn = AsNumber{100};
  EXPECT_THROW(append_block(empty, "t", "d", ""), NoGenesisError);

  Chain chain = create_chain(AsNumber{100}, fixed_clock(Timestamp{kT0}));
  EXPECT_THROW(append_block(chain, "t", "d", "", "",
                            fixed_clock(Timestamp{kT0 - 1})),
               ClockError);
  // Equal timestamps are allowed: two writes within one second.
  EXPECT_NO_THROW(append_block(chain, "t", "d", "", "",
                               fixed_clock(Timestamp{kT0})));
}

TEST(AppendBlock, ObsoletesRules) {
  Chain chain = create_chain(AsNumber{100}, fixed_clock(Timestamp{kT0}));
  const std::string b2_id =
      append_block(chain, "irr_route", "r1", "", "",
                   fixed_clock(Timestamp{kT0 + 1}))
          .block_id;

  // Unknown target.
  EXPECT_THROW(append_block(chain, "irr_route", "r2", "", std::string(64, 'e'),
                            fixed_clock(Timestamp{kT0 + 2})),
               ObsoletesRefError);
  // Type mismatch.
  EXPECT_THROW(append_block(chain, "irr_mntner", "m1", "", b2_id,
                            fixed_clock(Timestamp{kT0 + 2})),
               ObsoletesRefError);
  // Valid supersession.
  const Block& b3 = append_block(chain, "irr_route", "r2", "", b2_id,
                                 fixed_clock(Timestamp{kT0 + 2}));
  EXPECT_EQ(b3.obsoletes_block_id, b2_id);
  EXPECT_TRUE(is_obsolete(chain, b2_id));
  // Double supersession of the same target.
  EXPECT_THROW(append_block(chain, "irr_route", "r3", "", b2_id,
                            fixed_clock(Timestamp{kT0 + 3})),
               ObsoletesRefError);
}

TEST(WorkedExample, FourBlockShape) {
  const auto ex = testutil::make_example_chain();
  ASSERT_EQ(ex.chain.blocks.size(), 4u);
  EXPECT_EQ(ex.chain.blocks[0].block_seq, "1");
  EXPECT_EQ(ex.chain.blocks[1].block_seq, "2");
  EXPECT_EQ(ex.chain.blocks[2].block_seq, "3");
  EXPECT_EQ(ex.chain.blocks[3].block_seq, "4");
  EXPECT_EQ(ex.chain.blocks[1].block_type, "PublicKey");
  EXPECT_EQ(ex.chain.blocks[3].obsoletes_block_id, ex.chain.blocks[2].block_id);
  const Block* latest = latest_of_type(ex.chain, "irr_mntner");
  ASSERT_NE(latest, nullptr);
  EXPECT_EQ(latest->block_seq, "4");
  EXPECT_TRUE(verify_chain_integrity(ex.chain).ok());
}

TEST(Lookups, ByIdSeqAndSelector) {
  const auto ex = testutil::make_example_chain();
  const Block& b3 = ex.chain.blocks[2];
  EXPECT_EQ(get_block_by_id(ex.chain, b3.block_id), &b3);
  EXPECT_EQ(get_block_by_seq(ex.chain, "3"), &b3);
  EXPECT_EQ(get_block(ex.chain, b3.block_id), &b3);
  EXPECT_EQ(get_block(ex.chain, "3"), &b3);
  EXPECT_EQ(get_block_by_id(ex.chain, std::string(64, '0')), nullptr);
  EXPECT_EQ(get_block_by_seq(ex.chain, "99"), nullptr);
}

TEST(Lookups, LatestOfTypeSkipsObsoleteBlocks) {
  auto ex = testutil::make_example_chain();
  // Supersede block 4 as well; latest must follow.
  const std::string b4_id = ex.chain.blocks[3].block_id;
  append_block(ex.chain, "irr_mntner", "v3", sign_data(ex.keypair, "v3"), b4_id,
               fixed_clock(Timestamp{kT0 + 240}));
  const Block* latest = latest_of_type(ex.chain, "irr_mntner");
  ASSERT_NE(latest, nullptr);
  EXPECT_EQ(latest->block_seq, "5");
  EXPECT_EQ(latest_of_type(ex.chain, "no_such_type"), nullptr);
}

TEST(Integrity, DetectsTamperedData) {
  auto ex = testutil::make_example_chain();
  ex.chain.blocks[2].data += " tampered";
  const auto report = verify_chain_integrity(ex.chain);
  ASSERT_FALSE(report.ok());
  EXPECT_TRUE(has_kind(report, FailureKind::hash_mismatch));
}

TEST(Integrity, RehashedTamperBreaksLinkAtSuccessor) {
  auto ex = testutil::make_example_chain();
  ex.chain.blocks[2].data += " tampered";
  ex.chain.blocks[2].block_id = compute_block_id(ex.chain.blocks[2]);
  const auto report = verify_chain_integrity(ex.chain);
  ASSERT_FALSE(report.ok());
  EXPECT_TRUE(has_kind(report, FailureKind::broken_link));
  bool successor_flagged = false;
  for (const auto& f : report.failures)
    if (f.seq == "4" && f.kind == FailureKind::broken_link)
      successor_flagged = true;
  EXPECT_TRUE(successor_flagged);
}

TEST(Integrity, RejectsBadGenesisAndEmptyChain) {
  Chain empty;
  empty.asn = AsNumber{5};
  EXPECT_TRUE(has_kind(verify_chain_integrity(empty), FailureKind::bad_genesis));

  auto ex = testutil::make_example_chain();
  ex.chain.blocks.erase(ex.chain.blocks.begin());
  EXPECT_TRUE(
      has_kind(verify_chain_integrity(ex.chain), FailureKind::bad_genesis));
}

TEST(Integrity, RejectsSeqDisorderAndForeignAsn) {
  auto ex = testutil::make_example_chain();
  ex.chain.blocks[2].block_seq = "9";
  ex.chain.blocks[2].block_id = compute_block_id(ex.chain.blocks[2]);
  // Fix the forward link so only ordering breaks at block 4.
  ex.chain.blocks[3].previous_block_id = ex.chain.blocks[2].block_id;
  ex.chain.blocks[3].block_id = compute_block_id(ex.chain.blocks[3]);
  EXPECT_TRUE(has_kind(verify_chain_integrity(ex.chain), FailureKind::seq_order));

  auto ex2 = testutil::make_example_chain();
  ex2.chain.blocks[2].asn = AsNumber{999};
  ex2.chain.blocks[2].block_id = compute_block_id(ex2.chain.blocks[2]);
  ex2.chain.blocks[3].previous_block_id = ex2.chain.blocks[2].block_id;
  ex2.chain.blocks[3].block_id = compute_block_id(ex2.chain.blocks[3]);
  EXPECT_TRUE(
      has_kind(verify_chain_integrity(ex2.chain), FailureKind::broken_link));
}

TEST(Trust, SignedBlocksVerifyAgainstPublishedKey) {
  const auto ex = testutil::make_example_chain();
  for (const Block& b : ex.chain.blocks) {
    EXPECT_TRUE(verify_block_trust(ex.chain, b.block_id).ok())
        << "seq " << b.block_seq;
  }
}

TEST(Trust, UnknownBlockIdThrows) {
  const auto ex = testutil::make_example_chain();
  EXPECT_THROW(verify_block_trust(ex.chain, std::string(64, '0')),
               iichain::NotFoundError);
}

TEST(Trust, BadSignatureIsReported) {
  auto ex = testutil::make_example_chain();
  // Block with a hash-consistent but cryptographically wrong signature.
  append_block(ex.chain, "irr_mntner", "payload",
               sign_data(ex.keypair, "different payload"), "",
               fixed_clock(Timestamp{kT0 + 240}));
  const auto report =
      verify_block_trust(ex.chain, ex.chain.blocks.back().block_id);
  ASSERT_FALSE(report.ok());
  EXPECT_TRUE(has_kind(report, FailureKind::signature_invalid));
}

TEST(Trust, MissingKeyIsReported) {
  Chain chain = create_chain(AsNumber{200}, fixed_clock(Timestamp{kT0}));
  append_block(chain, "irr_route", "r", "c2ln", "",
               fixed_clock(Timestamp{kT0 + 1}));
  const auto report = verify_block_trust(chain, chain.blocks.back().block_id);
  ASSERT_FALSE(report.ok());
  EXPECT_TRUE(has_kind(report, FailureKind::missing_key));
}

TEST(Trust, KeyRotationKeepsHistoryValid) {
  auto ex = testutil::make_example_chain();
  const std::string old_key_block = ex.chain.blocks[1].block_id;

  const iichain::KeyPair fresh = iichain::generate_keypair(testutil::kExampleAsn);
  publish_public_key(ex.chain, fresh, fixed_clock(Timestamp{kT0 + 240}),
                     old_key_block);
  append_block(ex.chain, "irr_mntner", "new era",
               sign_data(fresh, "new era"), "",
               fixed_clock(Timestamp{kT0 + 300}));

  // Historical blocks still verify against the key that was live then.
  EXPECT_TRUE(verify_block_trust(ex.chain, ex.chain.blocks[2].block_id).ok());
  EXPECT_TRUE(verify_block_trust(ex.chain, ex.chain.blocks[3].block_id).ok());
  // New block verifies against the rotated-in key.
  EXPECT_TRUE(verify_block_trust(ex.chain, ex.chain.blocks.back().block_id).ok());

  // A block signed with the retired key no longer passes.
  append_block(ex.chain, "irr_mntner", "stale signer",
               sign_data(ex.keypair, "stale signer"), "",
               fixed_clock(Timestamp{kT0 + 360}));
  const auto report =
      verify_block_trust(ex.chain, ex.chain.blocks.back().block_id);
  EXPECT_TRUE(has_kind(report, FailureKind::signature_invalid));
}

TEST(Trust, AnchorPinsThePublishedKey) {
  const auto ex = testutil::make_example_chain();
  const std::string key_block_id = ex.chain.blocks[1].block_id;

  EXPECT_TRUE(verify_block_trust(ex.chain, key_block_id, ex.keypair.pub).ok());

  const iichain::KeyPair other = iichain::generate_keypair(testutil::kExampleAsn);
  const auto report = verify_block_trust(ex.chain, key_block_id, other.pub);
  ASSERT_FALSE(report.ok());
  EXPECT_TRUE(has_kind(report, FailureKind::signature_invalid));

  // Anchor also overrides resolution for data blocks.
  EXPECT_TRUE(
      verify_block_trust(ex.chain, ex.chain.blocks[2].block_id, ex.keypair.pub)
          .ok());
  EXPECT_FALSE(
      verify_block_trust(ex.chain, ex.chain.blocks[2].block_id, other.pub)
          .ok());
}

TEST(Persistence, FileRoundTrip) {
  testutil::TempDir dir;
  const auto ex = testutil::make_example_chain();
  const auto path = dir.path() / iichain::chain_file_name(ex.chain.asn);
  iichain::write_chain_file(ex.chain, path);
  const Chain loaded = iichain::read_chain_file(path);
  EXPECT_EQ(loaded.asn.value, ex.chain.asn.value);
  ASSERT_EQ(loaded.blocks.size(), ex.chain.blocks.size());
  for (std::size_t i = 0; i < loaded.blocks.size(); ++i)
    EXPECT_EQ(loaded.blocks[i], ex.chain.blocks[i]) << "block " << i;
}

TEST(Persistence, ErrorsNameFileAndLine) {
  testutil::TempDir dir;
  const auto missing = dir.path() / "absent.jsonl";
  EXPECT_THROW(iichain::read_chain_file(missing), iichain::StorageError);

  const auto empty = dir.path() / "empty.jsonl";
  testutil::write_text(empty, "");
  EXPECT_THROW(iichain::read_chain_file(empty), iichain::StorageError);

  const auto ex = testutil::make_example_chain();
  const auto corrupt = dir.path() / "corrupt.jsonl";
  testutil::write_text(corrupt,
                       iichain::block_to_json_line(ex.chain.blocks[0]) +
                           "\nnot json\n");
  try {
    iichain::read_chain_file(corrupt);
    FAIL() << "expected StorageError";
  } catch (const iichain::StorageError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos)
        << "message should carry the line number: " << e.what();
  }
}

TEST(Persistence, FileNameConvention) {
  EXPECT_EQ(iichain::chain_file_name(AsNumber{18782}), "AS18782.chain.jsonl");
}

}  // namespace
