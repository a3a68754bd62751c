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

#include "fairattack/config.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include <yaml-cpp/yaml.h>

#include "fairattack/errors.h"

namespace fairattack {

ConfigValue ConfigValue::Bool(bool v) {
  ConfigValue c;
  c.kind = Kind::kBool;
  c.bool_value = v;
  return c;
}

ConfigValue ConfigValue::Int(std::int64_t v) {
  ConfigValue c;
  c.kind = Kind::kInt;
  c.int_value = v;
  return c;
}

ConfigValue ConfigValue::Float(double v) {
  ConfigValue c;
  c.kind = Kind::kFloat;
  c.float_value = v;
  return c;
}

ConfigValue ConfigValue::String(std::string v) {
  ConfigValue c;
  c.kind = Kind::kString;
  c.string_value = std::move(v);
  return c;
}

ConfigValue ConfigValue::Array(std::vector<ConfigValue> v) {
  ConfigValue c;
  c.kind = Kind::kArray;
  c.items = std::move(v);
  return c;
}

namespace {

// ---------------------------------------------------------------------------
// Scalar typing.

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool IsValidKeySegment(std::string_view key) {
  if (key.empty()) return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

// Types an unquoted scalar: true/false, then an integer, then a float (a
// token containing '.', 'e' or 'E'). Anything else stays a string.
ConfigValue TypePlainScalar(const std::string& text) {
  if (text == "true") return ConfigValue::Bool(true);
  if (text == "false") return ConfigValue::Bool(false);
  // from_chars does not accept a leading '+'.
  std::string_view digits = text;
  if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
  if (!digits.empty() && (std::isdigit(static_cast<unsigned char>(digits.front())) ||
                          digits.front() == '-' || digits.front() == '.')) {
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    if (digits.find_first_of(".eE") != std::string_view::npos) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec == std::errc() && ptr == last) return ConfigValue::Float(v);
    } else {
      std::int64_t v = 0;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec == std::errc() && ptr == last) return ConfigValue::Int(v);
    }
  }
  return ConfigValue::String(text);
}

// ---------------------------------------------------------------------------
// YAML document -> dotted-key tree.

class TreeBuilder {
 public:
  explicit TreeBuilder(std::string_view source) : source_(source) {}

  [[noreturn]] void Fail(const YAML::Mark& mark, const std::string& what) const {
    const int line = mark.is_null() ? 0 : mark.line + 1;
    throw ConfigError(std::string(source_) + ":" + std::to_string(line) + ": " + what);
  }

  // Quoted scalars carry the non-specific tag "!" and are always strings.
  static ConfigValue Scalar(const YAML::Node& node) {
    if (node.Tag() == "!") return ConfigValue::String(node.Scalar());
    return TypePlainScalar(node.Scalar());
  }

  ConfigValue Value(const YAML::Node& node, const YAML::Mark& key_mark,
                    const std::string& key) const {
    switch (node.Type()) {
      case YAML::NodeType::Scalar:
        return Scalar(node);
      case YAML::NodeType::Sequence: {
        std::vector<ConfigValue> items;
        for (const YAML::Node& item : node) {
          if (!item.IsScalar()) Fail(item.Mark(), key + ": arrays may only hold scalars");
          items.push_back(Scalar(item));
        }
        return ConfigValue::Array(std::move(items));
      }
      default:
        Fail(key_mark, key + ": missing value");
    }
  }

  void Flatten(const YAML::Node& map, const std::string& prefix, ConfigTree* tree) const {
    for (const auto& entry : map) {
      const YAML::Node& k = entry.first;
      if (!k.IsScalar() || !IsValidKeySegment(k.Scalar())) {
        Fail(k.Mark(), "invalid key '" + (k.IsScalar() ? k.Scalar() : std::string("?")) + "'");
      }
      const std::string key = prefix.empty() ? k.Scalar() : prefix + "." + k.Scalar();
      if (entry.second.IsMap()) {
        Flatten(entry.second, key, tree);
        continue;
      }
      if (!tree->emplace(key, Value(entry.second, k.Mark(), key)).second) {
        Fail(k.Mark(), "duplicate key '" + key + "'");
      }
    }
  }

 private:
  std::string_view source_;
};

// ---------------------------------------------------------------------------
// Serialization helpers.

std::string FormatFloat(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), ptr);
  if (!std::isfinite(v)) throw ConfigError("cannot serialize non-finite value " + s);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

void EmitScalar(YAML::Emitter& out, const ConfigValue& v) {
  switch (v.kind) {
    case ConfigValue::Kind::kBool:
      out << v.bool_value;
      break;
    case ConfigValue::Kind::kInt:
      out << v.int_value;
      break;
    case ConfigValue::Kind::kFloat:
      out << FormatFloat(v.float_value);
      break;
    case ConfigValue::Kind::kString:
      out << YAML::DoubleQuoted << v.string_value;
      break;
    case ConfigValue::Kind::kArray:
      throw ConfigError("nested arrays cannot be serialized");
  }
}

void EmitValue(YAML::Emitter& out, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::kArray) {
    EmitScalar(out, v);
    return;
  }
  out << YAML::Flow << YAML::BeginSeq;
  for (const ConfigValue& item : v.items) EmitScalar(out, item);
  out << YAML::EndSeq;
}

using Entries = std::vector<std::pair<std::string_view, const ConfigValue*>>;

// Emits `entries` (keys relative to the current map, sorted) as one mapping:
// plain keys first, then one nested block per leading segment.
void EmitMap(YAML::Emitter& out, const Entries& entries) {
  std::map<std::string_view, Entries> nested;
  out << YAML::BeginMap;
  for (const auto& [key, value] : entries) {
    const std::size_t dot = key.find('.');
    if (dot == std::string_view::npos) {
      out << YAML::Key << std::string(key) << YAML::Value;
      EmitValue(out, *value);
    } else {
      nested[key.substr(0, dot)].emplace_back(key.substr(dot + 1), value);
    }
  }
  for (const auto& [table, inner] : nested) {
    out << YAML::Key << std::string(table) << YAML::Value;
    EmitMap(out, inner);
  }
  out << YAML::EndMap;
}

// ---------------------------------------------------------------------------
// Typed access.

constexpr std::array<std::string_view, 39> kKnownKeys = {
    "name",
    "dataset.path",
    "dataset.test_fraction",
    "dataset.label_column",
    "dataset.label_positive",
    "dataset.sensitive_column",
    "dataset.sensitive_threshold",
    "dataset.categorical",
    "dataset.numeric",
    "dataset.na_values",
    "federation.n_clients",
    "federation.n_malicious",
    "federation.rounds",
    "federation.repeats",
    "federation.threads",
    "model.hidden1",
    "model.hidden2",
    "train.epochs",
    "train.lr",
    "train.batch_size",
    "train.class_balanced",
    "attack.kind",
    "attack.lambda",
    "attack.mode",
    "attack.epsilon",
    "attack.grad_path",
    "attack.scale_factor",
    "attack.collude",
    "aggregation.rule",
    "aggregation.f_assumed",
    "aggregation.trim_ratio",
    "aggregation.select_m",
    "aggregation.fairfed_beta",
    "aggregation.fairtrade_lambda",
    "partition.kind",
    "partition.skew",
    "seeds.data",
    "seeds.init",
    "seeds.train",
};

constexpr std::array<std::string_view, 2> kGridKeys = {"grid.rules",
                                                       "grid.malicious_counts"};

bool IsKnownKey(std::string_view key) {
  return std::find(kKnownKeys.begin(), kKnownKeys.end(), key) != kKnownKeys.end() ||
         std::find(kGridKeys.begin(), kGridKeys.end(), key) != kGridKeys.end();
}

[[noreturn]] void TypeError(const std::string& key, std::string_view expected) {
  throw ConfigError(key + ": expected " + std::string(expected));
}

class TreeReader {
 public:
  explicit TreeReader(const ConfigTree& tree) : tree_(tree) {}

  const ConfigValue* Find(const std::string& key) const {
    const auto it = tree_.find(key);
    return it == tree_.end() ? nullptr : &it->second;
  }

  void String(const std::string& key, std::string* out) const {
    if (const ConfigValue* v = Find(key)) {
      if (v->kind != ConfigValue::Kind::kString) TypeError(key, "a string");
      *out = v->string_value;
    }
  }

  void Bool(const std::string& key, bool* out) const {
    if (const ConfigValue* v = Find(key)) {
      if (v->kind != ConfigValue::Kind::kBool) TypeError(key, "a boolean");
      *out = v->bool_value;
    }
  }

  void Int(const std::string& key, int* out) const {
    if (const ConfigValue* v = Find(key)) {
      if (v->kind != ConfigValue::Kind::kInt) TypeError(key, "an integer");
      if (v->int_value < std::numeric_limits<int>::min() ||
          v->int_value > std::numeric_limits<int>::max()) {
        TypeError(key, "an integer in int range");
      }
      *out = static_cast<int>(v->int_value);
    }
  }

  void Seed(const std::string& key, std::uint64_t* out) const {
    if (const ConfigValue* v = Find(key)) {
      if (v->kind != ConfigValue::Kind::kInt || v->int_value < 0) {
        TypeError(key, "a non-negative integer");
      }
      *out = static_cast<std::uint64_t>(v->int_value);
    }
  }

  void Double(const std::string& key, double* out) const {
    if (const ConfigValue* v = Find(key)) *out = AsDouble(key, *v);
  }

  void OptionalDouble(const std::string& key, std::optional<double>* out) const {
    if (const ConfigValue* v = Find(key)) *out = AsDouble(key, *v);
  }

  void StringArray(const std::string& key, std::vector<std::string>* out) const {
    if (const ConfigValue* v = Find(key)) {
      if (v->kind != ConfigValue::Kind::kArray) TypeError(key, "an array of strings");
      out->clear();
      for (const ConfigValue& item : v->items) {
        if (item.kind != ConfigValue::Kind::kString) TypeError(key, "an array of strings");
        out->push_back(item.string_value);
      }
    }
  }

  void IntArray(const std::string& key, std::vector<int>* out) const {
    if (const ConfigValue* v = Find(key)) {
      if (v->kind != ConfigValue::Kind::kArray) TypeError(key, "an array of integers");
      out->clear();
      for (const ConfigValue& item : v->items) {
        if (item.kind != ConfigValue::Kind::kInt) TypeError(key, "an array of integers");
        out->push_back(static_cast<int>(item.int_value));
      }
    }
  }

 private:
  static double AsDouble(const std::string& key, const ConfigValue& v) {
    if (v.kind == ConfigValue::Kind::kFloat) return v.float_value;
    if (v.kind == ConfigValue::Kind::kInt) return static_cast<double>(v.int_value);
    TypeError(key, "a number");
  }

  const ConfigTree& tree_;
};

template <typename Fn>
auto ParseEnum(const std::string& key, const std::string& text, Fn parse) {
  try {
    return parse(text);
  } catch (const InvalidArgument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

ConfigValue StringArrayValue(const std::vector<std::string>& v) {
  std::vector<ConfigValue> items;
  for (const std::string& s : v) items.push_back(ConfigValue::String(s));
  return ConfigValue::Array(std::move(items));
}

}  // namespace

ConfigTree ParseConfigText(std::string_view text, std::string_view source) {
  const TreeBuilder builder(source);
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    builder.Fail(e.mark, e.msg);
  }
  ConfigTree tree;
  if (root.IsNull()) return tree;
  if (!root.IsMap()) builder.Fail(root.Mark(), "the document must be a mapping");
  builder.Flatten(root, "", &tree);
  return tree;
}

std::string SerializeConfigTree(const ConfigTree& tree) {
  Entries entries;
  for (const auto& [key, value] : tree) entries.emplace_back(key, &value);
  YAML::Emitter out;
  out.SetBoolFormat(YAML::TrueFalseBool);
  out.SetBoolFormat(YAML::LowerCase);
  EmitMap(out, entries);
  if (!out.good()) throw ConfigError("cannot serialize config: " + out.GetLastError());
  return std::string(out.c_str()) + "\n";
}

ConfigValue ParseOverrideValue(std::string_view text) {
  text = Trim(text);
  if (text.empty()) throw ConfigError("missing override value");
  if (text.front() != '"' && text.front() != '\'' && text.front() != '[') {
    return TypePlainScalar(std::string(text));
  }
  const std::string value(text);
  const std::string source = "override value '" + value + "'";
  const TreeBuilder builder(source);
  YAML::Node node;
  try {
    node = YAML::Load(value);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ": " + e.msg);
  }
  return builder.Value(node, node.Mark(), source);
}

void ApplyOverride(ConfigTree& tree, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(Trim(assignment.substr(0, eq)));
  if (!IsKnownKey(key)) throw ConfigError("override references unknown key '" + key + "'");
  tree[key] = ParseOverrideValue(assignment.substr(eq + 1));
}

std::span<const std::string_view> KnownConfigKeys() { return kKnownKeys; }

ConfigFile ConfigFromTree(const ConfigTree& tree) {
  for (const auto& [key, value] : tree) {
    if (!IsKnownKey(key)) throw ConfigError("unknown configuration key '" + key + "'");
  }
  const TreeReader r(tree);
  ConfigFile file;
  ExperimentConfig& c = file.experiment;

  r.String("name", &c.name);
  r.String("dataset.path", &c.dataset_path);
  r.Double("dataset.test_fraction", &c.test_fraction);
  r.String("dataset.label_column", &c.schema.label_column);
  r.String("dataset.label_positive", &c.schema.label_positive_value);
  r.String("dataset.sensitive_column", &c.schema.sensitive_column);
  r.OptionalDouble("dataset.sensitive_threshold", &c.schema.sensitive_threshold);
  r.StringArray("dataset.categorical", &c.schema.categorical_columns);
  r.StringArray("dataset.numeric", &c.schema.numeric_columns);
  r.StringArray("dataset.na_values", &c.schema.na_values);

  r.Int("federation.n_clients", &c.n_clients);
  r.Int("federation.n_malicious", &c.n_malicious);
  r.Int("federation.rounds", &c.rounds);
  r.Int("federation.repeats", &c.repeats);
  r.Int("federation.threads", &c.threads);

  r.Int("model.hidden1", &c.hidden1);
  r.Int("model.hidden2", &c.hidden2);

  r.Int("train.epochs", &c.train.epochs);
  r.Double("train.lr", &c.train.lr);
  r.Int("train.batch_size", &c.train.batch_size);
  r.Bool("train.class_balanced", &c.train.class_balanced);

  std::string text;
  if (r.Find("attack.kind")) {
    r.String("attack.kind", &text);
    c.attack_kind = ParseEnum("attack.kind", text, ParseAttackKind);
  }
  r.Double("attack.lambda", &c.attack.lambda);
  if (r.Find("attack.mode")) {
    r.String("attack.mode", &text);
    c.attack.mode = ParseEnum("attack.mode", text, ParseAttackMode);
  }
  r.Double("attack.epsilon", &c.attack.epsilon_budget);
  if (r.Find("attack.grad_path")) {
    r.String("attack.grad_path", &text);
    c.attack.grad_path = ParseEnum("attack.grad_path", text, ParseGradPath);
  }
  r.Double("attack.scale_factor", &c.scale_factor);
  r.Bool("attack.collude", &c.collude);

  if (r.Find("aggregation.rule")) {
    r.String("aggregation.rule", &text);
    c.rule.kind = ParseEnum("aggregation.rule", text, ParseRuleKind);
  }
  r.Int("aggregation.f_assumed", &c.rule.f_assumed);
  r.Double("aggregation.trim_ratio", &c.rule.trim_ratio);
  r.Int("aggregation.select_m", &c.rule.select_m);
  r.Double("aggregation.fairfed_beta", &c.rule.fairfed_beta);
  r.Double("aggregation.fairtrade_lambda", &c.rule.fairtrade_lambda);

  if (r.Find("partition.kind")) {
    r.String("partition.kind", &text);
    c.partition = ParseEnum("partition.kind", text, ParsePartitionKind);
  }
  r.Double("partition.skew", &c.skew);

  r.Seed("seeds.data", &c.seeds.data);
  r.Seed("seeds.init", &c.seeds.init);
  r.Seed("seeds.train", &c.seeds.train);

  if (r.Find("grid.rules") || r.Find("grid.malicious_counts")) {
    GridSpec grid;
    grid.rules = {c.rule.kind};
    grid.malicious_counts = {c.n_malicious};
    std::vector<std::string> names;
    if (r.Find("grid.rules")) {
      r.StringArray("grid.rules", &names);
      grid.rules.clear();
      for (const std::string& n : names) {
        grid.rules.push_back(ParseEnum("grid.rules", n, ParseRuleKind));
      }
    }
    r.IntArray("grid.malicious_counts", &grid.malicious_counts);
    if (grid.rules.empty() || grid.malicious_counts.empty()) {
      throw ConfigError("grid.rules and grid.malicious_counts must be non-empty");
    }
    file.grid = std::move(grid);
  }

  c.Validate();
  if (file.grid) {
    for (RuleKind rule : file.grid->rules) {
      for (int m : file.grid->malicious_counts) {
        ExperimentConfig cell = c;
        cell.rule.kind = rule;
        cell.n_malicious = m;
        try {
          cell.Validate();
        } catch (const ConfigError& e) {
          throw ConfigError("grid cell (" + std::string(RuleName(rule)) + ", " +
                            std::to_string(m) + " malicious): " + e.what());
        }
      }
    }
  }
  return file;
}

ConfigTree ConfigToTree(const ConfigFile& file) {
  const ExperimentConfig& c = file.experiment;
  ConfigTree t;
  t["name"] = ConfigValue::String(c.name);
  t["dataset.path"] = ConfigValue::String(c.dataset_path);
  t["dataset.test_fraction"] = ConfigValue::Float(c.test_fraction);
  t["dataset.label_column"] = ConfigValue::String(c.schema.label_column);
  t["dataset.label_positive"] = ConfigValue::String(c.schema.label_positive_value);
  t["dataset.sensitive_column"] = ConfigValue::String(c.schema.sensitive_column);
  if (c.schema.sensitive_threshold) {
    t["dataset.sensitive_threshold"] = ConfigValue::Float(*c.schema.sensitive_threshold);
  }
  t["dataset.categorical"] = StringArrayValue(c.schema.categorical_columns);
  t["dataset.numeric"] = StringArrayValue(c.schema.numeric_columns);
  t["dataset.na_values"] = StringArrayValue(c.schema.na_values);

  t["federation.n_clients"] = ConfigValue::Int(c.n_clients);
  t["federation.n_malicious"] = ConfigValue::Int(c.n_malicious);
  t["federation.rounds"] = ConfigValue::Int(c.rounds);
  t["federation.repeats"] = ConfigValue::Int(c.repeats);
  t["federation.threads"] = ConfigValue::Int(c.threads);

  t["model.hidden1"] = ConfigValue::Int(c.hidden1);
  t["model.hidden2"] = ConfigValue::Int(c.hidden2);

  t["train.epochs"] = ConfigValue::Int(c.train.epochs);
  t["train.lr"] = ConfigValue::Float(c.train.lr);
  t["train.batch_size"] = ConfigValue::Int(c.train.batch_size);
  t["train.class_balanced"] = ConfigValue::Bool(c.train.class_balanced);

  t["attack.kind"] = ConfigValue::String(std::string(AttackKindName(c.attack_kind)));
  t["attack.lambda"] = ConfigValue::Float(c.attack.lambda);
  t["attack.mode"] = ConfigValue::String(std::string(AttackModeName(c.attack.mode)));
  t["attack.epsilon"] = ConfigValue::Float(c.attack.epsilon_budget);
  t["attack.grad_path"] = ConfigValue::String(std::string(GradPathName(c.attack.grad_path)));
  t["attack.scale_factor"] = ConfigValue::Float(c.scale_factor);
  t["attack.collude"] = ConfigValue::Bool(c.collude);

  t["aggregation.rule"] = ConfigValue::String(std::string(RuleName(c.rule.kind)));
  t["aggregation.f_assumed"] = ConfigValue::Int(c.rule.f_assumed);
  t["aggregation.trim_ratio"] = ConfigValue::Float(c.rule.trim_ratio);
  t["aggregation.select_m"] = ConfigValue::Int(c.rule.select_m);
  t["aggregation.fairfed_beta"] = ConfigValue::Float(c.rule.fairfed_beta);
  t["aggregation.fairtrade_lambda"] = ConfigValue::Float(c.rule.fairtrade_lambda);

  t["partition.kind"] = ConfigValue::String(std::string(PartitionKindName(c.partition)));
  t["partition.skew"] = ConfigValue::Float(c.skew);

  auto seed = [](std::uint64_t s) {
    if (s > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw ConfigError("seed " + std::to_string(s) + " does not fit a config integer");
    }
    return ConfigValue::Int(static_cast<std::int64_t>(s));
  };
  t["seeds.data"] = seed(c.seeds.data);
  t["seeds.init"] = seed(c.seeds.init);
  t["seeds.train"] = seed(c.seeds.train);

  if (file.grid) {
    std::vector<ConfigValue> rules, counts;
    for (RuleKind r : file.grid->rules) {
      rules.push_back(ConfigValue::String(std::string(RuleName(r))));
    }
    for (int m : file.grid->malicious_counts) counts.push_back(ConfigValue::Int(m));
    t["grid.rules"] = ConfigValue::Array(std::move(rules));
    t["grid.malicious_counts"] = ConfigValue::Array(std::move(counts));
  }
  return t;
}

std::string SerializeConfig(const ConfigFile& cfg) {
  return SerializeConfigTree(ConfigToTree(cfg));
}

ConfigFile ParseConfig(std::string_view text, std::span<const std::string> overrides,
                       std::string_view source) {
  ConfigTree tree = ParseConfigText(text, source);
  for (const std::string& o : overrides) ApplyOverride(tree, o);
  return ConfigFromTree(tree);
}

ConfigFile LoadConfigFile(const std::filesystem::path& path,
                          std::span<const std::string> overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ConfigFile cfg = ParseConfig(buf.str(), overrides, path.string());
  std::filesystem::path data_path(cfg.experiment.dataset_path);
  if (data_path.is_relative()) {
    // Absolute, so the echoed config stays loadable from any directory.
    cfg.experiment.dataset_path =
        std::filesystem::absolute(path.parent_path() / data_path).lexically_normal().string();
  }
  return cfg;
}

}  // namespace fairattack
