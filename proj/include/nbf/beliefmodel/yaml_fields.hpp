// Copyright 2026 The NBF Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Strict mapping readers for config documents: every key must be known and
// errors carry the 1-based line of the offending node.

#include <yaml-cpp/yaml.h>

#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "nbf/beliefmodel/config.hpp"

namespace nbf::beliefmodel {

using FieldReader = std::function<void(const YAML::Node&)>;

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

/// A null or missing node is an empty mapping.
inline void read_mapping(const YAML::Node& node, const std::map<std::string, FieldReader>& fields,
                         std::string_view what) {
  if (!node || node.IsNull()) return;
  if (!node.IsMap()) throw ConfigError(std::string(what) + " must be a mapping", line_of(node));
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    const auto it = fields.find(key);
    if (it == fields.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(what), line_of(kv.first));
    }
    try {
      it->second(kv.second);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("bad value for '" + key + "': " + e.what(), line_of(kv.second));
    }
  }
}

template <typename T>
FieldReader field(T& out) {
  return [&out](const YAML::Node& n) { out = n.as<T>(); };
}

}  // namespace nbf::beliefmodel
