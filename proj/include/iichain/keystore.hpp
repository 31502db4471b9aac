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

#include <sodium.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "iichain/canonical.hpp"
#include "iichain/encoding.hpp"
#include "iichain/types.hpp"

namespace iichain {

// Per-ASN asymmetric keys. One Ed25519 pair serves both purposes: detached
// signatures over block data, and (converted to X25519) sealed-box encryption
// of inter-controller messages. The algorithm identifier is recorded in every
// published key so alternative backends can be introduced without changing
// the chain format.

inline constexpr std::string_view kDefaultKeyAlgorithm = "ed25519+x25519-sealed";

struct PublicKeyRecord {
  AsNumber asn{};
  std::string algorithm;
  std::string key_material;  // base64 of the raw 32-byte Ed25519 public key
  std::string fingerprint;   // SHA-256 hex of the decoded key material

  bool operator==(const PublicKeyRecord&) const = default;

  // Field order is fixed; this exact JSON string is the payload of every
  // PublicKey block.
  std::string to_json() const {
    return nlohmann::ordered_json{{"asn", asn.value},
                                  {"algorithm", algorithm},
                                  {"key_material", key_material},
                                  {"fingerprint", fingerprint}}
        .dump();
  }

  static PublicKeyRecord from_json(std::string_view text) {
    const auto j = nlohmann::ordered_json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("asn") ||
        !j.at("asn").is_number_unsigned() || !j.contains("algorithm") ||
        !j.at("algorithm").is_string() || !j.contains("key_material") ||
        !j.at("key_material").is_string() || !j.contains("fingerprint") ||
        !j.at("fingerprint").is_string()) {
      throw ShapeError("public key record: malformed JSON");
    }
    const auto asn_raw = j.at("asn").get<std::uint64_t>();
    if (asn_raw == 0 || asn_raw > UINT32_MAX)
      throw ShapeError("public key record: asn out of range");
    PublicKeyRecord rec;
    rec.asn = AsNumber{static_cast<std::uint32_t>(asn_raw)};
    rec.algorithm = j.at("algorithm").get<std::string>();
    rec.key_material = j.at("key_material").get<std::string>();
    rec.fingerprint = j.at("fingerprint").get<std::string>();
    const auto raw = from_base64(rec.key_material);
    if (!raw) throw ShapeError("public key record: key_material not base64");
    if (rec.fingerprint != sha256_hex({reinterpret_cast<const char*>(raw->data()), raw->size()}))
      throw ShapeError("public key record: fingerprint does not match key material");
    return rec;
  }
};

struct KeyPair {
  AsNumber asn{};
  PublicKeyRecord pub;
  // Raw 64-byte Ed25519 secret key. Lives only in memory and in the keydir
  // secret file; it must never reach a chain, archive or canonical form.
  std::vector<unsigned char> secret;
};

inline KeyPair generate_keypair(AsNumber asn) {
  if (!asn.valid()) throw ShapeError("invalid asn");
  ensure_sodium();
  unsigned char pk[crypto_sign_PUBLICKEYBYTES];
  unsigned char sk[crypto_sign_SECRETKEYBYTES];
  if (crypto_sign_keypair(pk, sk) != 0)
    throw CryptoError("key generation failed");
  KeyPair kp;
  kp.asn = asn;
  kp.secret.assign(sk, sk + sizeof sk);
  kp.pub.asn = asn;
  kp.pub.algorithm = std::string(kDefaultKeyAlgorithm);
  kp.pub.key_material = to_base64(pk, sizeof pk);
  kp.pub.fingerprint =
      sha256_hex({reinterpret_cast<const char*>(pk), sizeof pk});
  return kp;
}

// Detached Ed25519 signature over the UTF-8 bytes of `data`, base64-encoded.
// Ed25519 is deterministic: signing the same bytes twice yields the same
// signature.
inline std::string sign_data(const KeyPair& keypair, std::string_view data) {
  ensure_sodium();
  if (keypair.secret.size() != crypto_sign_SECRETKEYBYTES)
    throw CryptoError("malformed secret key");
  unsigned char sig[crypto_sign_BYTES];
  crypto_sign_detached(sig, nullptr,
                       reinterpret_cast<const unsigned char*>(data.data()),
                       data.size(), keypair.secret.data());
  return to_base64(sig, sizeof sig);
}

// True iff `signature` is a valid detached signature by `pub` over `data`.
// Malformed base64, wrong lengths and unknown algorithms all yield false,
// never an exception.
inline bool verify_signature(const PublicKeyRecord& pub, std::string_view data,
                             std::string_view signature) {
  ensure_sodium();
  if (pub.algorithm != kDefaultKeyAlgorithm) return false;
  const auto sig = from_base64(signature);
  if (!sig || sig->size() != crypto_sign_BYTES) return false;
  const auto pk = from_base64(pub.key_material);
  if (!pk || pk->size() != crypto_sign_PUBLICKEYBYTES) return false;
  return crypto_sign_verify_detached(
             sig->data(), reinterpret_cast<const unsigned char*>(data.data()),
             data.size(), pk->data()) == 0;
}

// Sealed-box encryption to the holder of `pub`: an ephemeral X25519 key
// agreement, so the ciphertext is self-contained and only the matching
// secret key can open it.
inline std::string encrypt_for(const PublicKeyRecord& pub,
                               std::string_view plaintext) {
  ensure_sodium();
  if (pub.algorithm != kDefaultKeyAlgorithm)
    throw CryptoError("unsupported key algorithm: " + pub.algorithm);
  const auto ed_pk = from_base64(pub.key_material);
  if (!ed_pk || ed_pk->size() != crypto_sign_PUBLICKEYBYTES)
    throw CryptoError("malformed public key material");
  unsigned char x_pk[crypto_box_PUBLICKEYBYTES];
  if (crypto_sign_ed25519_pk_to_curve25519(x_pk, ed_pk->data()) != 0)
    throw CryptoError("public key not convertible to X25519");
  std::string out(plaintext.size() + crypto_box_SEALBYTES, '\0');
  if (crypto_box_seal(reinterpret_cast<unsigned char*>(out.data()),
                      reinterpret_cast<const unsigned char*>(plaintext.data()),
                      plaintext.size(), x_pk) != 0)
    throw CryptoError("encryption failed");
  return out;
}

inline std::string decrypt(const KeyPair& keypair, std::string_view ciphertext) {
  ensure_sodium();
  if (keypair.secret.size() != crypto_sign_SECRETKEYBYTES)
    throw CryptoError("malformed secret key");
  if (ciphertext.size() < crypto_box_SEALBYTES)
    throw DecryptionError("ciphertext too short");
  unsigned char x_sk[crypto_box_SECRETKEYBYTES];
  if (crypto_sign_ed25519_sk_to_curve25519(x_sk, keypair.secret.data()) != 0)
    throw CryptoError("secret key not convertible to X25519");
  const auto ed_pk = from_base64(keypair.pub.key_material);
  if (!ed_pk || ed_pk->size() != crypto_sign_PUBLICKEYBYTES)
    throw CryptoError("malformed public key material");
  unsigned char x_pk[crypto_box_PUBLICKEYBYTES];
  if (crypto_sign_ed25519_pk_to_curve25519(x_pk, ed_pk->data()) != 0)
    throw CryptoError("public key not convertible to X25519");
  std::string out(ciphertext.size() - crypto_box_SEALBYTES, '\0');
  if (crypto_box_seal_open(
          reinterpret_cast<unsigned char*>(out.data()),
          reinterpret_cast<const unsigned char*>(ciphertext.data()),
          ciphertext.size(), x_pk, x_sk) != 0) {
    throw DecryptionError("decryption failed: wrong key or corrupted ciphertext");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Key files: <keydir>/AS<asn>.secret (owner-only) and <keydir>/AS<asn>.pub.json.
// ---------------------------------------------------------------------------

inline std::filesystem::path secret_key_path(const std::filesystem::path& keydir,
                                             AsNumber asn) {
  return keydir / (asn.tag() + ".secret");
}

inline std::filesystem::path public_record_path(
    const std::filesystem::path& keydir, AsNumber asn) {
  return keydir / (asn.tag() + ".pub.json");
}

inline void save_keypair(const KeyPair& kp, const std::filesystem::path& keydir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(keydir, ec);
  if (ec) throw StorageError("cannot create keydir: " + keydir.string());

  const auto secret_path = secret_key_path(keydir, kp.asn);
  {
    std::ofstream out(secret_path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + secret_path.string());
    out << nlohmann::ordered_json{
               {"asn", kp.asn.value},
               {"algorithm", kp.pub.algorithm},
               {"secret_key", to_base64(kp.secret.data(), kp.secret.size())}}
               .dump()
        << '\n';
  }
  fs::permissions(secret_path,
                  fs::perms::owner_read | fs::perms::owner_write,
                  fs::perm_options::replace, ec);

  const auto pub_path = public_record_path(keydir, kp.asn);
  std::ofstream out(pub_path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write " + pub_path.string());
  out << kp.pub.to_json() << '\n';
}

inline PublicKeyRecord load_public_record(const std::filesystem::path& keydir,
                                          AsNumber asn) {
  const auto path = public_record_path(keydir, asn);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("no public key record at " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return PublicKeyRecord::from_json(text);
}

inline KeyPair load_keypair(const std::filesystem::path& keydir, AsNumber asn) {
  const auto path = secret_key_path(keydir, asn);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("no secret key at " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  const auto j = nlohmann::ordered_json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("asn") ||
      !j.contains("secret_key") || !j.at("secret_key").is_string()) {
    throw StorageError("malformed secret key file: " + path.string());
  }
  if (j.at("asn").get<std::uint64_t>() != asn.value)
    throw StorageError("secret key file ASN mismatch: " + path.string());
  const auto sk = from_base64(j.at("secret_key").get<std::string>());
  if (!sk || sk->size() != crypto_sign_SECRETKEYBYTES)
    throw StorageError("malformed secret key material: " + path.string());

  KeyPair kp;
  kp.asn = asn;
  kp.secret = *sk;
  // Rebuild the public record from the secret key so the pair is always
  // self-consistent even if the .pub.json file is missing.
  unsigned char pk[crypto_sign_PUBLICKEYBYTES];
  if (crypto_sign_ed25519_sk_to_pk(pk, kp.secret.data()) != 0)
    throw CryptoError("cannot derive public key from secret key");
  kp.pub.asn = asn;
  kp.pub.algorithm = std::string(kDefaultKeyAlgorithm);
  kp.pub.key_material = to_base64(pk, sizeof pk);
  kp.pub.fingerprint = sha256_hex({reinterpret_cast<const char*>(pk), sizeof pk});
  return kp;
}

}  // namespace iichain
