#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace conespec::cli {

inline constexpr const char* kVersion = "0.1.0";

/// The schema shipped in schema/run_config.schema.json, compiled in.
const nlohmann::json& run_config_schema();

/// Dotted path ("manifold.profile.c", "sobolev.eps[1]") -> 1-based line of
/// the key or array element in the source text. The text must be valid JSON.
std::map<std::string, int> line_index(const std::string& text);

struct SchemaIssue {
  std::string path;
  std::string message;
};

/// Checks doc against the subset of JSON Schema the shipped schema uses:
/// type, properties, required, additionalProperties, enum, minimum, maximum,
/// exclusiveMinimum, items, minItems.
std::vector<SchemaIssue> validate(const nlohmann::json& doc, const nlohmann::json& schema,
                                  const std::string& path = "");

/// Fills "default" values of the schema into doc for absent keys, recursively.
void apply_defaults(nlohmann::json& doc, const nlohmann::json& schema);

std::uint64_t fnv1a64(std::string_view bytes);

struct RunConfig {
  std::string command;
  nlohmann::json doc;  // effective configuration, defaults applied
  std::string hash;    // 16 hex digits of FNV-1a over the canonical dump
  std::string origin;  // config file name, for messages
  std::string base_dir;  // directory relative file paths resolve against
  std::map<std::string, std::string> anchors;  // path -> "file:line" or "--set key"

  /// Nearest recorded anchor for path or one of its ancestors.
  std::string anchor(const std::string& path) const;
  /// ConfigError message "anchor: path: message".
  [[noreturn]] void fail(const std::string& path, const std::string& message) const;

  const nlohmann::json& at(const std::string& path) const;
  std::string output_dir() const { return doc.at("output").at("dir").get<std::string>(); }
};

/// Parses the config text, applies --set overrides ("a.b=value", scalars
/// only), fills defaults and validates. Every failure is a ConfigError whose
/// message starts with a line anchor.
RunConfig load_config(const std::string& text, const std::string& origin, const std::string& base_dir,
                      const std::string& command, const std::vector<std::string>& overrides);

/// Canonical form hashed for the cache key: sorted keys, output section
/// removed, tool version included.
std::string canonical_dump(const nlohmann::json& doc);

}  // namespace conespec::cli
