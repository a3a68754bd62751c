/*
 * Copyright 2026 The FairAttack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Experiment configuration files.
//
// Configs are YAML documents whose top level is a mapping; nested mappings
// act as tables:
//
//   name: "adult_fedavg"   # comment
//   federation:
//     n_clients: 10
//   dataset:
//     categorical: ["workclass", "sex"]
//
// Leaf values are scalars or sequences of scalars. Quoted scalars are
// strings; unquoted ones are booleans (true/false), integers, floats
// (containing '.' or an exponent) or, failing those, strings. Every value is
// addressed by its dotted key ("federation.n_clients"), which is also the key
// used by command-line overrides.

#ifndef FAIRATTACK_CONFIG_H_
#define FAIRATTACK_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairattack/aggregation.h"
#include "fairattack/simulator.h"

namespace fairattack {

struct ConfigValue {
  enum class Kind { kBool, kInt, kFloat, kString, kArray };

  Kind kind = Kind::kString;
  bool bool_value = false;
  std::int64_t int_value = 0;
  double float_value = 0.0;
  std::string string_value;
  std::vector<ConfigValue> items;

  static ConfigValue Bool(bool v);
  static ConfigValue Int(std::int64_t v);
  static ConfigValue Float(double v);
  static ConfigValue String(std::string v);
  static ConfigValue Array(std::vector<ConfigValue> v);

  bool operator==(const ConfigValue&) const = default;
};

// Dotted key -> value.
using ConfigTree = std::map<std::string, ConfigValue>;

// Throws ConfigError with "<source>:<line>: ..." on malformed input or
// duplicate keys.
ConfigTree ParseConfigText(std::string_view text, std::string_view source = "<config>");

// Canonical text form: top-level keys first, then one nested mapping per
// prefix, keys sorted; strings are always quoted.
// ParseConfigText(SerializeConfigTree(t)) == t.
std::string SerializeConfigTree(const ConfigTree& tree);

// Parses the right-hand side of an override. Values starting with a quote or
// '[' are parsed as YAML; anything else is typed like an unquoted scalar.
ConfigValue ParseOverrideValue(std::string_view text);

// Applies "dotted.key=value". The key must be a known configuration key.
void ApplyOverride(ConfigTree& tree, std::string_view assignment);

// Every key understood by ConfigFromTree().
std::span<const std::string_view> KnownConfigKeys();

struct GridSpec {
  std::vector<RuleKind> rules;
  std::vector<int> malicious_counts;
  bool operator==(const GridSpec&) const = default;
};

struct ConfigFile {
  ExperimentConfig experiment;
  std::optional<GridSpec> grid;
  bool operator==(const ConfigFile&) const = default;
};

// Missing keys keep their defaults; unknown keys and wrong value types throw
// ConfigError. The result is validated.
ConfigFile ConfigFromTree(const ConfigTree& tree);
ConfigTree ConfigToTree(const ConfigFile& cfg);

std::string SerializeConfig(const ConfigFile& cfg);
ConfigFile ParseConfig(std::string_view text,
                       std::span<const std::string> overrides = {},
                       std::string_view source = "<config>");

// Reads a file, applies overrides and resolves a relative dataset path
// against the directory containing the file.
ConfigFile LoadConfigFile(const std::filesystem::path& path,
                          std::span<const std::string> overrides = {});

}  // namespace fairattack

#endif  // FAIRATTACK_CONFIG_H_
