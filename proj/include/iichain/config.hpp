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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "iichain/types.hpp"

namespace iichain {

struct Config {
  std::filesystem::path chain_dir = "chains";
  std::filesystem::path keydir = "keys";
  std::filesystem::path registry_root = "registry";
  std::string publish_base_url;  // optional; empty means unset
};

// Configuration precedence: IICHAIN_CONFIG names a file, otherwise
// ./iichain.json is used when present, otherwise the defaults stand.
// Command-line flags override whatever was loaded.
inline Config load_config() {
  std::filesystem::path path;
  if (const char* env = std::getenv("IICHAIN_CONFIG")) {
    path = env;
    if (!std::filesystem::exists(path))
      throw ConfigError("IICHAIN_CONFIG points at a missing file: " +
                        path.string());
  } else if (std::filesystem::exists("iichain.json")) {
    path = "iichain.json";
  } else {
    return Config{};
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw ConfigError("config file is not valid JSON: " + path.string());
  if (!j.is_object())
    throw ConfigError("config file is not a JSON object: " + path.string());

  Config config;
  const auto take = [&](const char* key, auto& into) {
    if (!j.contains(key)) return;
    if (!j[key].is_string())
      throw ConfigError(std::string("config field ") + key +
                        " must be a string");
    into = j[key].get<std::string>();
  };
  std::string chain_dir, keydir, registry_root;
  take("chain_dir", chain_dir);
  take("keydir", keydir);
  take("registry_root", registry_root);
  take("publish_base_url", config.publish_base_url);
  if (!chain_dir.empty()) config.chain_dir = chain_dir;
  if (!keydir.empty()) config.keydir = keydir;
  if (!registry_root.empty()) config.registry_root = registry_root;
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "chain_dir" && key != "keydir" && key != "registry_root" &&
        key != "publish_base_url")
      throw ConfigError("config file has unknown field " + key);
  }
  if (!config.publish_base_url.empty() &&
      config.publish_base_url.find("://") == std::string::npos)
    throw ConfigError("publish_base_url must be a URL with a scheme");
  return config;
}

}  // namespace iichain
