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

#include <httplib.h>

#include <filesystem>
#include <string>
#include <utility>

#include "iichain/archive.hpp"
#include "iichain/types.hpp"

namespace iichain {

namespace detail {

// Splits "scheme://host[:port]/optional/prefix" into the client base and the
// path prefix ("" or "/optional/prefix", no trailing slash).
inline std::pair<std::string, std::string> split_base_url(
    const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos)
    throw FetchError("base URL lacks a scheme: " + base_url);
  const auto path_start = base_url.find('/', scheme_end + 3);
  std::string base = base_url.substr(0, path_start);
  std::string prefix =
      path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  if (base.size() == scheme_end + 3)
    throw FetchError("base URL lacks a host: " + base_url);
  return {std::move(base), std::move(prefix)};
}

inline std::string http_get(httplib::Client& client, const std::string& path) {
  httplib::Result res = client.Get(path);
  if (!res)
    throw FetchError("connection failed for " + path + ": " +
                     httplib::to_string(res.error()));
  if (res->status != 200)
    throw FetchError("HTTP " + std::to_string(res->status) + " for " + path);
  return res->body;
}

inline std::string trim_ascii(std::string s) {
  const char* ws = " \t\r\n";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

}  // namespace detail

// Downloads the newest published archive for an AS. The publisher keeps a
// plain-text index file AS<asn>.latest next to the archives naming the file
// to take. The download is validated as a full archive import before the
// file becomes visible in dest_dir, so a failed fetch leaves nothing behind.
inline std::filesystem::path fetch_remote(const std::string& base_url,
                                          AsNumber asn,
                                          const std::filesystem::path& dest_dir) {
  auto [base, prefix] = detail::split_base_url(base_url);
  httplib::Client client(base);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);

  const std::string index_name = asn.tag() + ".latest";
  const std::string archive_name =
      detail::trim_ascii(detail::http_get(client, prefix + "/" + index_name));
  AsNumber named_asn{};
  try {
    named_asn = parse_archive_name(archive_name).first;
  } catch (const MalformedNameError& e) {
    throw FetchError("index " + index_name + " names an invalid archive: " +
                     e.what());
  }
  if (named_asn.value != asn.value)
    throw FetchError("index " + index_name + " points at " + named_asn.tag() +
                     " instead of " + asn.tag());

  const std::string body = detail::http_get(client, prefix + "/" + archive_name);

  std::filesystem::create_directories(dest_dir);
  std::string tmp_template = (dest_dir / ".fetch-XXXXXX").string();
  if (::mkdtemp(tmp_template.data()) == nullptr)
    throw FetchError("cannot create staging directory under " +
                     dest_dir.string());
  const std::filesystem::path staging(tmp_template);
  const std::filesystem::path staged = staging / archive_name;
  const std::filesystem::path dest = dest_dir / archive_name;
  try {
    detail::write_file_bytes(staged, body);
    import_archive(staged);  // full validation before publication
    std::filesystem::rename(staged, dest);
  } catch (const Error& e) {
    std::error_code ec;
    std::filesystem::remove_all(staging, ec);
    throw FetchError("fetched archive failed validation: " +
                     std::string(e.what()));
  }
  std::error_code ec;
  std::filesystem::remove_all(staging, ec);
  return dest;
}

}  // namespace iichain
