#include "run_config.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

#include "conespec/errors.hpp"
#include "schema_data.hpp"

namespace conespec::cli {

using nlohmann::json;

const json& run_config_schema() {
  static const json schema = json::parse(kRunConfigSchema);
  return schema;
}

namespace {

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

// Walks JSON text that nlohmann already accepted, so malformed input is not handled.
class LineScanner {
 public:
  explicit LineScanner(const std::string& text) : s_(text) {}

  std::map<std::string, int> run() {
    skip_ws();
    value("");
    return out_;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      if (s_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string_token() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
        out += s_[pos_ + 1];
        pos_ += 2;
        continue;
      }
      out += s_[pos_++];
    }
    ++pos_;  // closing quote
    return out;
  }

  void value(const std::string& path) {
    skip_ws();
    if (pos_ >= s_.size()) return;
    const char ch = s_[pos_];
    if (ch == '{') {
      ++pos_;
      skip_ws();
      if (s_[pos_] == '}') {
        ++pos_;
        return;
      }
      while (pos_ < s_.size()) {
        skip_ws();
        const int key_line = line_;
        const std::string key = string_token();
        out_[join(path, key)] = key_line;
        skip_ws();
        ++pos_;  // colon
        value(join(path, key));
        skip_ws();
        if (s_[pos_++] == '}') return;
      }
    } else if (ch == '[') {
      ++pos_;
      skip_ws();
      if (s_[pos_] == ']') {
        ++pos_;
        return;
      }
      for (int i = 0; pos_ < s_.size(); ++i) {
        skip_ws();
        const std::string p = path + "[" + std::to_string(i) + "]";
        out_[p] = line_;
        value(p);
        skip_ws();
        if (s_[pos_++] == ']') return;
      }
    } else if (ch == '"') {
      string_token();
    } else {
      while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != '}' && s_[pos_] != ']' &&
             !std::isspace(static_cast<unsigned char>(s_[pos_])))
        ++pos_;
    }
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> out_;
};

bool type_matches(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "null") return v.is_null();
  return false;
}

std::string short_dump(const json& v) {
  std::string s = v.dump();
  return s.size() > 40 ? s.substr(0, 37) + "..." : s;
}

// Splits "a.b[2].c" into segments; an index segment is stored as "[2]".
std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const char ch = path[i];
    if (ch == '.') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (ch == '[') {
      if (!cur.empty()) out.push_back(cur);
      const auto close = path.find(']', i);
      if (close == std::string::npos) return {};
      out.push_back(path.substr(i, close - i + 1));
      cur.clear();
      i = close;
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int line_of_byte(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

std::map<std::string, int> line_index(const std::string& text) { return LineScanner(text).run(); }

std::vector<SchemaIssue> validate(const json& doc, const json& schema, const std::string& path) {
  std::vector<SchemaIssue> issues;
  const std::string where = path.empty() ? "(root)" : path;
  if (schema.contains("type")) {
    const std::string type = schema["type"].get<std::string>();
    if (!type_matches(doc, type)) {
      issues.push_back({where, "expected " + type + ", got " + short_dump(doc)});
      return issues;
    }
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == doc;
    if (!found) issues.push_back({where, short_dump(doc) + " is not one of " + schema["enum"].dump()});
  }
  if (doc.is_number()) {
    const double x = doc.get<double>();
    if (schema.contains("minimum") && x < schema["minimum"].get<double>())
      issues.push_back({where, "must be >= " + schema["minimum"].dump()});
    if (schema.contains("maximum") && x > schema["maximum"].get<double>())
      issues.push_back({where, "must be <= " + schema["maximum"].dump()});
    if (schema.contains("exclusiveMinimum") && !(x > schema["exclusiveMinimum"].get<double>()))
      issues.push_back({where, "must be > " + schema["exclusiveMinimum"].dump()});
  }
  if (doc.is_object()) {
    const json props = schema.value("properties", json::object());
    if (schema.contains("required")) {
      for (const auto& key : schema["required"])
        if (!doc.contains(key.get<std::string>()))
          issues.push_back({where, "missing required key \"" + key.get<std::string>() + "\""});
    }
    for (const auto& [key, value] : doc.items()) {
      if (props.contains(key)) {
        auto sub = validate(value, props[key], join(path, key));
        issues.insert(issues.end(), sub.begin(), sub.end());
      } else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false) {
        issues.push_back({join(path, key), "unknown key"});
      }
    }
  }
  if (doc.is_array()) {
    if (schema.contains("minItems") && doc.size() < schema["minItems"].get<std::size_t>())
      issues.push_back({where, "needs at least " + schema["minItems"].dump() + " items"});
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < doc.size(); ++i) {
        auto sub = validate(doc[i], schema["items"], path + "[" + std::to_string(i) + "]");
        issues.insert(issues.end(), sub.begin(), sub.end());
      }
    }
  }
  return issues;
}

void apply_defaults(json& doc, const json& schema) {
  if (doc.is_object() && schema.contains("properties")) {
    for (const auto& [key, sub] : schema["properties"].items()) {
      if (!doc.contains(key) && sub.contains("default")) doc[key] = sub["default"];
      if (doc.contains(key)) apply_defaults(doc[key], sub);
    }
  }
  if (doc.is_array() && schema.contains("items")) {
    for (auto& item : doc) apply_defaults(item, schema["items"]);
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string canonical_dump(const json& doc) {
  json c = doc;
  c.erase("output");
  c["tool_version"] = kVersion;
  return c.dump();  // object keys are kept sorted
}

std::string RunConfig::anchor(const std::string& path) const {
  std::string p = path;
  while (true) {
    if (auto it = anchors.find(p); it != anchors.end()) return it->second;
    const auto cut = p.find_last_of(".[");
    if (cut == std::string::npos || p.empty()) break;
    p = p.substr(0, cut);
  }
  return origin + ":1";
}

void RunConfig::fail(const std::string& path, const std::string& message) const {
  throw ConfigError(anchor(path) + ": " + path + ": " + message);
}

const json& RunConfig::at(const std::string& path) const {
  const json* cur = &doc;
  for (const auto& seg : split_path(path)) {
    if (seg.front() == '[') {
      const std::size_t i = std::stoul(seg.substr(1, seg.size() - 2));
      if (!cur->is_array() || i >= cur->size()) fail(path, "missing");
      cur = &(*cur)[i];
    } else {
      if (!cur->is_object() || !cur->contains(seg)) fail(path, "missing");
      cur = &(*cur)[seg];
    }
  }
  return *cur;
}

RunConfig load_config(const std::string& text, const std::string& origin, const std::string& base_dir,
                      const std::string& command, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  cfg.origin = origin;
  cfg.base_dir = base_dir;
  try {
    cfg.doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(line_of_byte(text, e.byte)) + ": invalid JSON: " + e.what());
  }
  for (const auto& [path, line] : line_index(text)) cfg.anchors[path] = origin + ":" + std::to_string(line);
  if (!cfg.doc.is_object()) throw ConfigError(origin + ":1: configuration must be a JSON object");

  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set " + ov + ": expected key.path=value");
    const std::string key = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;  // bare words are strings
    }
    if (value.is_object() || value.is_array())
      throw ConfigError("--set " + key + ": only scalar fields can be overridden");
    const auto segs = split_path(key);
    if (segs.empty()) throw ConfigError("--set " + ov + ": malformed key path");
    json* cur = &cfg.doc;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const bool last = i + 1 == segs.size();
      const std::string& seg = segs[i];
      if (seg.front() == '[') {
        const std::size_t idx = std::stoul(seg.substr(1, seg.size() - 2));
        if (!cur->is_array() || idx >= cur->size()) throw ConfigError("--set " + key + ": no array element " + seg);
        cur = &(*cur)[idx];
      } else {
        if (cur->is_null()) *cur = json::object();
        if (!cur->is_object()) throw ConfigError("--set " + key + ": " + seg + " is inside a non-object");
        if (!last && !cur->contains(seg)) (*cur)[seg] = json::object();
        cur = &(*cur)[seg];
      }
      if (last) *cur = value;
    }
    cfg.anchors[key] = "--set " + key;
  }

  if (cfg.doc.contains("command") && cfg.doc["command"].is_string() && cfg.doc["command"] != command) {
    throw ConfigError(cfg.anchor("command") + ": command: config is for \"" + cfg.doc["command"].get<std::string>() +
                      "\" but \"" + command + "\" was requested");
  }
  cfg.doc["command"] = command;
  const auto issues = validate(cfg.doc, run_config_schema());
  if (!issues.empty()) {
    std::ostringstream msg;
    for (std::size_t i = 0; i < issues.size(); ++i) {
      if (i) msg << '\n';
      const std::string& p = issues[i].path == "(root)" ? std::string() : issues[i].path;
      msg << cfg.anchor(p) << ": " << issues[i].path << ": " << issues[i].message;
    }
    throw ConfigError(msg.str());
  }
  apply_defaults(cfg.doc, run_config_schema());
  cfg.command = command;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_dump(cfg.doc))));
  cfg.hash = buf;
  return cfg;
}

}  // namespace conespec::cli
