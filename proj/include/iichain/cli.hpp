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

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "iichain/archive.hpp"
#include "iichain/block.hpp"
#include "iichain/chain.hpp"
#include "iichain/compaction.hpp"
#include "iichain/config.hpp"
#include "iichain/fetch.hpp"
#include "iichain/keystore.hpp"
#include "iichain/registry.hpp"
#include "iichain/sizing.hpp"
#include "iichain/types.hpp"

namespace iichain {

namespace detail {

struct ChainPair {
  Chain chain;
  ObsoleteChain obsolete;
};

inline std::filesystem::path main_chain_path(const Config& config, AsNumber asn) {
  return config.chain_dir / chain_file_name(asn);
}

inline std::filesystem::path obsolete_chain_path(const Config& config,
                                                 AsNumber asn) {
  return config.chain_dir / obsolete_chain_file_name(asn);
}

inline std::filesystem::path chain_lock_path(const Config& config, AsNumber asn) {
  return config.chain_dir / ("." + asn.tag() + ".lock");
}

inline ChainPair load_chain_pair(const Config& config, AsNumber asn) {
  const auto main_path = main_chain_path(config, asn);
  const auto obsolete_path = obsolete_chain_path(config, asn);
  if (!std::filesystem::exists(main_path))
    throw NotFoundError("no chain for " + asn.tag() + " under " +
                        config.chain_dir.string() + "; run 'init " +
                        std::to_string(asn.value) + "' first");
  if (!std::filesystem::exists(obsolete_path))
    throw NotFoundError("chain for " + asn.tag() +
                        " is missing its obsolete chain file");
  return {read_chain_file(main_path), read_obsolete_chain_file(obsolete_path)};
}

inline void save_chain_pair(const Config& config, const ChainPair& pair) {
  write_chain_file(pair.chain, main_chain_path(config, pair.chain.asn));
  write_obsolete_chain_file(pair.obsolete,
                            obsolete_chain_path(config, pair.obsolete.asn));
}

// Recipient key lookup for encryption: the local keydir wins, then the
// registry's current copy of the recipient's chain.
inline PublicKeyRecord find_recipient_key(const Config& config, AsNumber asn,
                                          const Clock& clock) {
  try {
    return load_public_record(config.keydir, asn);
  } catch (const Error&) {
  }
  const Registry registry{config.registry_root, clock, nullptr};
  if (const auto chain = load_current_chain(registry, asn)) {
    if (const Block* key_block = latest_of_type(*chain, kPublicKeyType)) {
      try {
        return PublicKeyRecord::from_json(key_block->data);
      } catch (const Error&) {
      }
    }
  }
  throw NotFoundError("no public key known for " + asn.tag() +
                      " (not in keydir, no usable registry copy)");
}

inline void print_block_text(std::ostream& out, const Block& block) {
  const auto j = block_to_json(block);
  for (const auto& [key, value] : j.items()) {
    if (value.is_string())
      out << key << ": " << value.get<std::string>() << '\n';
    else
      out << key << ": " << value.dump() << '\n';
  }
}

inline void require_utf8_payload(const std::string& data) {
  try {
    (void)nlohmann::json(data).dump();
  } catch (const nlohmann::json::exception&) {
    throw ShapeError("data must be UTF-8 text to be stored in a chain");
  }
}

inline void print_verify_failures(std::ostream& out, const std::string& label,
                                  const VerificationReport& report) {
  for (const auto& f : report.failures)
    out << label << " failure at seq " << f.seq << ": " << to_string(f.kind)
        << ": " << f.detail << '\n';
}

}  // namespace detail

// Full command-line surface. Returns 0 on success, 1 on a domain error and 2
// on a usage error; `args` is argv without the program name.
inline int run_cli(std::vector<std::string> args, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"iichain: per-AS append-only hash chains with signed data,\n"
               "compaction, archive exchange and a multi-AS registry"};
  app.require_subcommand(1);

  std::string opt_chain_dir, opt_keydir, opt_registry_root;
  app.add_option("--chain-dir", opt_chain_dir, "Directory holding local chain files");
  app.add_option("--keydir", opt_keydir, "Directory holding key material");
  app.add_option("--registry", opt_registry_root, "Registry root directory");

  const Clock clock = system_clock_utc();
  const auto effective_config = [&]() {
    Config config = load_config();
    if (!opt_chain_dir.empty()) config.chain_dir = opt_chain_dir;
    if (!opt_keydir.empty()) config.keydir = opt_keydir;
    if (!opt_registry_root.empty()) config.registry_root = opt_registry_root;
    return config;
  };
  const auto registry_for = [&](const Config& config) {
    return Registry{config.registry_root, clock, nullptr};
  };

  std::uint32_t arg_asn = 0;
  bool arg_json = false;
  bool arg_force = false;
  bool arg_trust = false;
  std::string arg_type, arg_data_file, arg_obsoletes, arg_block, arg_seq;
  std::string arg_out_dir = ".";
  std::string arg_zipfile, arg_from, arg_in, arg_out_file;
  std::uint32_t arg_to = 0;

  int exit_code = 0;

  auto* sc_init = app.add_subcommand("init", "Create a chain pair for an AS");
  sc_init->add_option("asn", arg_asn, "AS number")->required()->check(CLI::PositiveNumber);
  sc_init->callback([&] {
    const Config config = effective_config();
    const AsNumber asn{arg_asn};
    std::filesystem::create_directories(config.chain_dir);
    detail::FileLock lock(detail::chain_lock_path(config, asn));
    const auto main_path = detail::main_chain_path(config, asn);
    if (std::filesystem::exists(main_path))
      throw StorageError("chain already exists: " + main_path.string());
    detail::ChainPair pair{create_chain(asn, clock),
                           create_obsolete_chain(asn, clock)};
    detail::save_chain_pair(config, pair);
    out << "initialized " << asn.tag() << " with genesis "
        << pair.chain.blocks.front().block_id << '\n';
  });

  auto* sc_keygen = app.add_subcommand("keygen", "Generate a signing keypair for an AS");
  sc_keygen->add_option("asn", arg_asn, "AS number")->required()->check(CLI::PositiveNumber);
  sc_keygen->add_flag("--force", arg_force, "Replace an existing keypair");
  sc_keygen->callback([&] {
    const Config config = effective_config();
    const AsNumber asn{arg_asn};
    if (!arg_force &&
        std::filesystem::exists(secret_key_path(config.keydir, asn)))
      throw StorageError("keypair already exists for " + asn.tag() +
                         " (use --force to replace)");
    const KeyPair kp = generate_keypair(asn);
    save_keypair(kp, config.keydir);
    out << "generated keypair for " << asn.tag() << " fingerprint "
        << kp.pub.fingerprint << '\n';
  });

  auto* sc_publish = app.add_subcommand(
      "publish-key", "Append a PublicKey block carrying the AS's own key");
  sc_publish->add_option("asn", arg_asn, "AS number")->required()->check(CLI::PositiveNumber);
  sc_publish->add_option("--obsoletes", arg_obsoletes,
                         "Block id of the key block being rotated out");
  sc_publish->callback([&] {
    const Config config = effective_config();
    const AsNumber asn{arg_asn};
    detail::FileLock lock(detail::chain_lock_path(config, asn));
    detail::ChainPair pair = detail::load_chain_pair(config, asn);
    const KeyPair kp = load_keypair(config.keydir, asn);
    const Block& block = publish_public_key(pair.chain, kp, clock, arg_obsoletes);
    detail::save_chain_pair(config, pair);
    out << "published key at seq " << block.block_seq << " block "
        << block.block_id << '\n';
  });

  auto* sc_append = app.add_subcommand(
      "append", "Sign a payload with the AS's key and append it as a block");
  sc_append->add_option("asn", arg_asn, "AS number")->required()->check(CLI::PositiveNumber);
  sc_append->add_option("--type", arg_type, "Block type, e.g. irr_mntner")->required();
  sc_append->add_option("--data-file", arg_data_file, "File holding the payload")
      ->required()
      ->check(CLI::ExistingFile);
  sc_append->add_option("--obsoletes", arg_obsoletes,
                        "Block id this block supersedes");
  sc_append->callback([&] {
    const Config config = effective_config();
    const AsNumber asn{arg_asn};
    if (arg_type == kGenesisType)
      throw ShapeError("block type Genesis is reserved for chain creation");
    if (arg_type == kPublicKeyType)
      throw ShapeError("use publish-key to append PublicKey blocks");
    detail::FileLock lock(detail::chain_lock_path(config, asn));
    detail::ChainPair pair = detail::load_chain_pair(config, asn);
    const KeyPair kp = load_keypair(config.keydir, asn);
    const std::string data = detail::read_file_bytes(arg_data_file);
    detail::require_utf8_payload(data);
    const Block& block = append_block(pair.chain, arg_type, data,
                                      sign_data(kp, data), arg_obsoletes, clock);
    detail::save_chain_pair(config, pair);
    out << "appended seq " << block.block_seq << " block " << block.block_id
        << '\n';
  });

  auto* sc_verify = app.add_subcommand(
      "verify", "Check chain integrity and optionally signature trust");
  sc_verify->add_option("asn", arg_asn, "AS number")->required()->check(CLI::PositiveNumber);
  sc_verify->add_option("--block", arg_block,
                        "Restrict the trust stage to one block id (implies --trust)");
  sc_verify->add_flag("--trust", arg_trust,
                      "Also verify block signatures against published keys");
  sc_verify->add_flag("--json", arg_json, "Machine-readable output");
  sc_verify->callback([&] {
    const Config config = effective_config();
    const AsNumber asn{arg_asn};
    const detail::ChainPair pair = detail::load_chain_pair(config, asn);
    const VerificationReport main_report = verify_chain_integrity(pair.chain);
    const VerificationReport obsolete_report =
        verify_chain_integrity(pair.obsolete);
    VerificationReport trust_report;
    if (arg_trust || !arg_block.empty()) {
      if (!arg_block.empty()) {
        trust_report = verify_block_trust(pair.chain, arg_block);
      } else {
        for (const Block& b : pair.chain.blocks) {
          for (auto& f : verify_block_trust(pair.chain, b.block_id).failures)
            trust_report.failures.push_back(std::move(f));
        }
      }
    }
    const bool ok = main_report.ok() && obsolete_report.ok() && trust_report.ok();
    if (arg_json) {
      nlohmann::ordered_json j;
      j["asn"] = asn.value;
      j["ok"] = ok;
      j["main_integrity"] = main_report.to_json();
      j["obsolete_integrity"] = obsolete_report.to_json();
      j["trust"] = trust_report.to_json();
      out << j.dump() << '\n';
    } else {
      detail::print_verify_failures(out, "main integrity", main_report);
      detail::print_verify_failures(out, "obsolete integrity", obsolete_report);
      detail::print_verify_failures(out, "trust", trust_report);
      out << (ok ? "ok" : "FAILED") << '\n';
    }
    if (!ok) exit_code = 1;
  });

  auto* sc_show = app.add_subcommand("show", "Print a chain or one of its blocks");
  sc_show->add_option("asn", arg_asn, "AS number")->required()->check(CLI::PositiveNumber);
  auto* show_seq = sc_show->add_option("--seq", arg_seq, "Select a block by sequence label");
  sc_show->add_option("--block", arg_block, "Select a block by id")->excludes(show_seq);
  sc_show->add_flag("--json", arg_json, "Machine-readable output");
  sc_show->callback([&] {
    const Config config = effective_config();
    const AsNumber asn{arg_asn};
    const detail::ChainPair pair = detail::load_chain_pair(config, asn);
    if (!arg_seq.empty() || !arg_block.empty()) {
      const Block* block = arg_seq.empty()
                               ? get_block_by_id(pair.chain, arg_block)
                               : get_block_by_seq(pair.chain, arg_seq);
      if (block == nullptr)
        throw NotFoundError("no such block in the " + asn.tag() + " chain");
      if (arg_json)
        out << block_to_json_line(*block) << '\n';
      else
        detail::print_block_text(out, *block);
      return;
    }
    if (arg_json) {
      auto list = nlohmann::ordered_json::array();
      for (const Block& b : pair.chain.blocks) list.push_back(block_to_json(b));
      out << list.dump() << '\n';
    } else {
      for (const Block& b : pair.chain.blocks)
        out << b.block_seq << '\t' << b.block_type << '\t' << b.block_id << '\n';
    }
  });

  auto* sc_latest = app.add_subcommand(
      "latest", "Print the newest non-obsolete block of a type");
  sc_latest->add_option("asn", arg_asn, "AS number")->required()->check(CLI::PositiveNumber);
  sc_latest->add_option("--type", arg_type, "Block type to look for")->required();
  sc_latest->add_flag("--json", arg_json, "Machine-readable output");
  sc_latest->callback([&] {
    const Config config = effective_config();
    const AsNumber asn{arg_asn};
    const detail::ChainPair pair = detail::load_chain_pair(config, asn);
    const Block* block = latest_of_type(pair.chain, arg_type);
    if (block == nullptr)
      throw NotFoundError("no non-obsolete block of type '" + arg_type +
                          "' in the " + asn.tag() + " chain");
    if (arg_json)
      out << block_to_json_line(*block) << '\n';
    else
      detail::print_block_text(out, *block);
  });

  auto* sc_compact = app.add_subcommand(
      "compact", "Migrate obsolete blocks into the obsolete chain");
  sc_compact->add_option("asn", arg_asn, "AS number")->required()->check(CLI::PositiveNumber);
  sc_compact->callback([&] {
    const Config config = effective_config();
    const AsNumber asn{arg_asn};
    detail::FileLock lock(detail::chain_lock_path(config, asn));
    detail::ChainPair pair = detail::load_chain_pair(config, asn);
    const std::size_t migrated = compact(pair.chain, pair.obsolete);
    detail::save_chain_pair(config, pair);
    out << "migrated " << migrated << " block(s) to the obsolete chain\n";
  });

  auto* sc_export = app.add_subcommand(
      "export", "Package the chain pair into a versioned ZIP archive");
  sc_export->add_option("asn", arg_asn, "AS number")->required()->check(CLI::PositiveNumber);
  sc_export->add_option("--out", arg_out_dir, "Destination directory")
      ->capture_default_str();
  sc_export->callback([&] {
    const Config config = effective_config();
    const AsNumber asn{arg_asn};
    detail::FileLock lock(detail::chain_lock_path(config, asn));
    const detail::ChainPair pair = detail::load_chain_pair(config, asn);
    const auto path = export_chains(pair.chain, pair.obsolete, arg_out_dir, clock);
    out << path.string() << '\n';
  });

  auto* sc_import = app.add_subcommand(
      "import", "Validate an archive and store it as a registry version");
  sc_import->add_option("zipfile", arg_zipfile, "Archive to import")
      ->required()
      ->check(CLI::ExistingFile);
  sc_import->callback([&] {
    const Config config = effective_config();
    const VersionMeta meta = store_version(registry_for(config), arg_zipfile);
    out << "stored " << meta.name.render() << '\n';
  });

  auto* sc_fetch = app.add_subcommand(
      "fetch", "Download an AS's newest published archive into the registry");
  sc_fetch->add_option("asn", arg_asn, "AS number")->required()->check(CLI::PositiveNumber);
  sc_fetch->add_option("--from", arg_from, "Base URL of the publisher");
  sc_fetch->callback([&] {
    const Config config = effective_config();
    const AsNumber asn{arg_asn};
    const std::string base =
        !arg_from.empty() ? arg_from : config.publish_base_url;
    if (base.empty())
      throw ConfigError("no --from URL given and config has no publish_base_url");
    const Registry registry = registry_for(config);
    const auto staged =
        fetch_remote(base, asn, config.registry_root / "incoming");
    try {
      const VersionMeta meta = store_version(registry, staged);
      out << "stored " << meta.name.render() << '\n';
    } catch (const DuplicateVersionError&) {
      out << "already stored " << staged.filename().string() << '\n';
    } catch (...) {
      std::error_code ec;
      std::filesystem::remove(staged, ec);
      throw;
    }
    std::error_code ec;
    std::filesystem::remove(staged, ec);
  });

  auto* sc_versions = app.add_subcommand(
      "versions", "List stored chain versions for an AS, newest first");
  sc_versions->add_option("asn", arg_asn, "AS number")->required()->check(CLI::PositiveNumber);
  sc_versions->add_flag("--json", arg_json, "Machine-readable output");
  sc_versions->callback([&] {
    const Config config = effective_config();
    const auto versions = list_versions(registry_for(config), AsNumber{arg_asn});
    if (arg_json) {
      auto list = nlohmann::ordered_json::array();
      for (const VersionMeta& v : versions) list.push_back(v.to_json());
      out << list.dump() << '\n';
    } else {
      for (const VersionMeta& v : versions)
        out << v.name.render() << "\texported " << v.exported_at.to_string()
            << "\timported " << v.imported_at.to_string() << '\n';
    }
  });

  auto* sc_resolve = app.add_subcommand(
      "resolve", "Look a block up in the registry with alert-and-fallback");
  sc_resolve->add_option("asn", arg_asn, "AS number")->required()->check(CLI::PositiveNumber);
  sc_resolve->add_option("--block", arg_block, "Block id to resolve")->required();
  sc_resolve->add_flag("--json", arg_json, "Machine-readable output");
  sc_resolve->callback([&] {
    const Config config = effective_config();
    const Resolution res =
        resolve_block(registry_for(config), AsNumber{arg_asn}, arg_block);
    if (arg_json) {
      nlohmann::ordered_json j;
      j["block"] = block_to_json(res.block);
      j["version"] = res.version.to_json();
      out << j.dump() << '\n';
    } else {
      out << "resolved from version " << res.version.name.render() << '\n';
      detail::print_block_text(out, res.block);
    }
  });

  auto* sc_alerts = app.add_subcommand("alerts", "Print the registry alert log");
  sc_alerts->add_flag("--json", arg_json, "Machine-readable output");
  sc_alerts->callback([&] {
    const Config config = effective_config();
    const auto alerts = read_alerts(registry_for(config));
    if (arg_json) {
      auto list = nlohmann::ordered_json::array();
      for (const AlertRecord& a : alerts) list.push_back(a.to_json());
      out << list.dump() << '\n';
    } else {
      for (const AlertRecord& a : alerts)
        out << a.raised_at.to_string() << ' ' << a.asn.tag() << ' '
            << to_string(a.stage) << " block " << a.block_id << " version "
            << a.version << ": " << a.detail << '\n';
    }
  });

  SizingParams sizing;
  bool arg_paper_mode = false;
  auto* sc_estimate = app.add_subcommand(
      "estimate", "Estimate total storage for a full deployment");
  sc_estimate->add_option("--max-block-bytes", sizing.max_block_bytes,
                          "Largest measured block in bytes")->required();
  sc_estimate->add_option("--irr-objects", sizing.irr_objects_per_as,
                          "Routing-registry objects per AS")->required();
  sc_estimate->add_option("--as-count", sizing.as_count, "Number of ASes")->required();
  sc_estimate->add_option("--protocols", sizing.protocol_count,
                          "Number of tracked protocols")->required();
  sc_estimate->add_option("--multiplier", sizing.block_multiplier,
                          "Headroom factor per block")->capture_default_str();
  sc_estimate->add_option("--blocks-per-protocol", sizing.blocks_per_protocol,
                          "Operational blocks per protocol")->capture_default_str();
  sc_estimate->add_option("--obsolete-fraction", sizing.obsolete_fraction,
                          "Fraction of blocks awaiting compaction")
      ->capture_default_str();
  sc_estimate->add_flag("--paper-mode", arg_paper_mode,
                        "Count the protocol contribution once instead of per protocol");
  sc_estimate->add_flag("--json", arg_json, "Machine-readable output");
  sc_estimate->callback([&] {
    const EstimateReport report = estimate_total(sizing, arg_paper_mode);
    if (arg_json)
      out << report.to_json().dump() << '\n';
    else
      out << format_estimate(report);
  });

  auto* sc_encrypt = app.add_subcommand(
      "encrypt", "Encrypt a file so only the target AS can read it");
  sc_encrypt->add_option("--to", arg_to, "Recipient AS number")
      ->required()
      ->check(CLI::PositiveNumber);
  sc_encrypt->add_option("--in", arg_in, "Plaintext input file")
      ->required()
      ->check(CLI::ExistingFile);
  sc_encrypt->add_option("--out", arg_out_file, "Ciphertext output file")->required();
  sc_encrypt->callback([&] {
    const Config config = effective_config();
    const AsNumber to{arg_to};
    const PublicKeyRecord pub = detail::find_recipient_key(config, to, clock);
    const std::string plaintext = detail::read_file_bytes(arg_in);
    detail::write_file_bytes(arg_out_file, encrypt_for(pub, plaintext) + "\n");
    out << "encrypted " << plaintext.size() << " bytes for " << to.tag() << '\n';
  });

  auto* sc_decrypt = app.add_subcommand(
      "decrypt", "Decrypt a file addressed to this AS");
  sc_decrypt->add_option("--asn", arg_asn, "Recipient AS number (local key)")
      ->required()
      ->check(CLI::PositiveNumber);
  sc_decrypt->add_option("--in", arg_in, "Ciphertext input file")
      ->required()
      ->check(CLI::ExistingFile);
  sc_decrypt->add_option("--out", arg_out_file, "Plaintext output file")->required();
  sc_decrypt->callback([&] {
    const Config config = effective_config();
    const KeyPair kp = load_keypair(config.keydir, AsNumber{arg_asn});
    const std::string ciphertext =
        detail::trim_ascii(detail::read_file_bytes(arg_in));
    const std::string plaintext = decrypt(kp, ciphertext);
    detail::write_file_bytes(arg_out_file, plaintext);
    out << "decrypted " << plaintext.size() << " bytes\n";
  });

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    while (!target->get_subcommands().empty())
      target = target->get_subcommands().front();
    out << target->help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n'
        << "run with --help for usage\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
  return exit_code;
}

}  // namespace iichain
