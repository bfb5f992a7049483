#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "toolscope/protocol.hpp"
#include "toolscope/value.hpp"

namespace toolscope {

// ---------------------------------------------------------------------------
// Name sanitization

/// Lowercase, collapse every non-[a-z0-9_] run to one underscore, strip
/// leading digits/underscores and trailing underscores. Throws when nothing
/// survives.
inline std::string sanitize_identifier(const std::string& raw) {
  std::string out;
  bool pending_sep = false;
  for (unsigned char c : raw) {
    char lower = static_cast<char>(std::tolower(c));
    if ((lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9') || lower == '_') {
      if (pending_sep && !out.empty()) out += '_';
      pending_sep = false;
      out += lower;
    } else {
      pending_sep = true;
    }
  }
  std::size_t start = 0;
  while (start < out.size() && (std::isdigit(static_cast<unsigned char>(out[start])) || out[start] == '_'))
    ++start;
  out.erase(0, start);
  while (!out.empty() && out.back() == '_') out.pop_back();
  if (out.empty())
    throw Error("unsanitizable-name", "'" + raw + "' has no identifier characters left after sanitization");
  return out;
}

// ---------------------------------------------------------------------------
// Normalized signatures

struct NormalizedParam {
  std::string name;       // sanitized identifier
  std::string wire_name;  // original schema property name
  std::string type;       // int, float, str, bool, list, map, any
  bool required = false;
  std::optional<json> default_value;
  std::optional<double> min_value;
  std::optional<double> max_value;
  std::optional<json> enum_values;
  std::string description;
};

struct NormalizedSignature {
  std::string function_name;
  std::string server;
  std::string tool;
  std::vector<NormalizedParam> params;  // wire order

  /// Original wire argument name for a sanitized parameter name.
  std::optional<std::string> wire_name(const std::string& param) const {
    for (const NormalizedParam& p : params)
      if (p.name == param) return p.wire_name;
    return std::nullopt;
  }

  /// "name(query: str (required), limit: int (optional, default=20, max=100))"
  /// with every required parameter rendered before the optional ones.
  std::string text() const {
    std::string out = function_name + "(";
    bool first = true;
    auto emit = [&](const NormalizedParam& p) {
      if (!first) out += ", ";
      first = false;
      out += p.name + ": " + p.type + " (";
      out += p.required ? "required" : "optional";
      if (!p.required && p.default_value) out += ", default=" + p.default_value->dump();
      if (p.min_value) out += ", min=" + format_number_text(*p.min_value);
      if (p.max_value) out += ", max=" + format_number_text(*p.max_value);
      if (p.enum_values) out += ", enum=" + p.enum_values->dump();
      out += ")";
    };
    for (const NormalizedParam& p : params)
      if (p.required) emit(p);
    for (const NormalizedParam& p : params)
      if (!p.required) emit(p);
    out += ")";
    return out;
  }
};

namespace schemadetail {

inline std::string canonical_type(const json& prop) {
  if (!prop.contains("type")) {
    // First-alternative heuristic for anyOf/oneOf.
    for (const char* alt : {"anyOf", "oneOf"}) {
      if (prop.contains(alt) && prop[alt].is_array() && !prop[alt].empty())
        return canonical_type(prop[alt][0]);
    }
    return "any";
  }
  const json& t = prop["type"];
  std::string name;
  if (t.is_string()) {
    name = t.get<std::string>();
  } else if (t.is_array() && !t.empty() && t[0].is_string()) {
    name = t[0].get<std::string>();  // first alternative
  } else {
    throw Error("malformed-schema", "property declares a contradictory or non-string type: " + t.dump());
  }
  if (name == "integer") return "int";
  if (name == "number") return "float";
  if (name == "string") return "str";
  if (name == "boolean") return "bool";
  if (name == "array") return "list";
  if (name == "object") return "map";
  if (name == "null") return "any";
  return "any";
}

}  // namespace schemadetail

/// Normalize one tool schema into a canonical function signature. Lossless:
/// each wire property maps to exactly one parameter and the wire name is
/// retained for the reverse direction.
inline NormalizedSignature normalize(const ToolSchema& schema) {
  const json& in = schema.input_schema;
  if (!in.is_object())
    throw Error("malformed-schema", "input schema of '" + schema.tool + "' is not an object");
  NormalizedSignature sig;
  sig.server = schema.server;
  sig.tool = schema.tool;
  sig.function_name = sanitize_identifier(schema.tool);

  std::set<std::string> required;
  if (in.contains("required")) {
    if (!in["required"].is_array())
      throw Error("malformed-schema", "'required' of '" + schema.tool + "' is not an array");
    for (const json& r : in["required"]) {
      if (!r.is_string())
        throw Error("malformed-schema", "'required' of '" + schema.tool + "' contains a non-string");
      required.insert(r.get<std::string>());
    }
  }

  std::set<std::string> seen_names;
  std::set<std::string> property_names;
  if (in.contains("properties")) {
    if (!in["properties"].is_object())
      throw Error("malformed-schema", "'properties' of '" + schema.tool + "' is not an object");
    for (const auto& [wire_name, prop] : in["properties"].items()) {
      property_names.insert(wire_name);
      if (!prop.is_object())
        throw Error("malformed-schema",
                    "property '" + wire_name + "' of '" + schema.tool + "' is not an object");
      NormalizedParam p;
      p.wire_name = wire_name;
      p.name = sanitize_identifier(wire_name);
      if (!seen_names.insert(p.name).second)
        throw Error("name-collision", "two properties of '" + schema.tool +
                                          "' sanitize to the same name '" + p.name + "'");
      p.type = schemadetail::canonical_type(prop);
      p.required = required.count(wire_name) > 0;
      if (prop.contains("default")) p.default_value = prop["default"];
      if (prop.contains("minimum") && prop["minimum"].is_number())
        p.min_value = prop["minimum"].get<double>();
      if (prop.contains("maximum") && prop["maximum"].is_number())
        p.max_value = prop["maximum"].get<double>();
      if (prop.contains("enum") && prop["enum"].is_array()) p.enum_values = prop["enum"];
      if (prop.contains("description") && prop["description"].is_string())
        p.description = prop["description"].get<std::string>();
      sig.params.push_back(std::move(p));
    }
  }

  for (const std::string& r : required) {
    if (!property_names.count(r))
      throw Error("malformed-schema",
                  "'" + schema.tool + "' requires unknown property '" + r + "'");
  }
  return sig;
}

/// Programmatic check that normalization lost nothing: wire properties and
/// parameters are in bijection.
inline bool verify_normalization(const NormalizedSignature& sig, const ToolSchema& schema) {
  std::set<std::string> wire;
  if (schema.input_schema.contains("properties"))
    for (const auto& [k, v] : schema.input_schema["properties"].items()) wire.insert(k);
  std::set<std::string> mapped;
  for (const NormalizedParam& p : sig.params) {
    if (!wire.count(p.wire_name)) return false;
    if (!mapped.insert(p.wire_name).second) return false;
  }
  return mapped.size() == wire.size();
}

/// Per-server cache of normalized signatures; collisions between two tools
/// of one server are an error rather than a silent rename.
class SignatureIndex {
 public:
  explicit SignatureIndex(Registry& registry) : registry_(&registry) {}

  const std::vector<NormalizedSignature>& for_server(const std::string& server) {
    auto it = cache_.find(server);
    if (it != cache_.end()) return it->second;
    std::vector<NormalizedSignature> sigs;
    std::set<std::string> names;
    for (const ToolSchema& schema : registry_->list_tools(server)) {
      NormalizedSignature sig = normalize(schema);
      if (!names.insert(sig.function_name).second)
        throw Error("name-collision", "two tools of server '" + server +
                                          "' sanitize to the same function name '" +
                                          sig.function_name + "'");
      sigs.push_back(std::move(sig));
    }
    return cache_.emplace(server, std::move(sigs)).first->second;
  }

  const NormalizedSignature* find(const std::string& server, const std::string& function_name) {
    for (const NormalizedSignature& sig : for_server(server))
      if (sig.function_name == function_name) return &sig;
    return nullptr;
  }

  std::vector<std::string> function_names(const std::string& server) {
    std::vector<std::string> out;
    for (const NormalizedSignature& sig : for_server(server)) out.push_back(sig.function_name);
    return out;
  }

  Registry& registry() { return *registry_; }

 private:
  Registry* registry_;
  std::map<std::string, std::vector<NormalizedSignature>> cache_;
};

// ---------------------------------------------------------------------------
// Prompt-facing renderings

/// Compact names-only block, one per server:
///   Server: 'Time MCP'
///   Available Tools: get_current_time, convert_time
inline std::string render_tool_names(Registry& registry, const std::string& server) {
  std::string out = "Server: '" + server + "'\nAvailable Tools: ";
  bool first = true;
  for (const ToolSchema& t : registry.list_tools(server)) {
    if (!first) out += ", ";
    out += t.tool;
    first = false;
  }
  return out;
}

namespace schemadetail {

inline std::string render_tool_block(const ToolSchema& t) {
  std::string out = "Tool: `" + t.server + ":" + t.tool + "` (Server: " + t.server + ")\n";
  out += "  Description: " + t.description + "\n";
  out += "  Input Schema:\n";
  out += t.input_schema.dump(2);
  return out;
}

}  // namespace schemadetail

/// Full raw-schema blocks in the transcript layout, headed by
/// "Tools in server='X'". `tools` restricts to a subset when given.
inline std::string render_full_schemas(Registry& registry, const std::string& server,
                                       const std::optional<std::vector<std::string>>& tools = std::nullopt) {
  const std::vector<ToolSchema>& all = registry.list_tools(server);
  if (tools) {
    for (const std::string& name : *tools) {
      bool found = false;
      for (const ToolSchema& t : all)
        if (t.tool == name) found = true;
      if (!found) throw Error("unknown-tool", "server '" + server + "' has no tool '" + name + "'");
    }
  }
  std::string out = "Tools in server='" + server + "'";
  for (const ToolSchema& t : all) {
    if (tools && std::find(tools->begin(), tools->end(), t.tool) == tools->end()) continue;
    out += "\n\n";
    out += schemadetail::render_tool_block(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output catalog

struct OutputRecord {
  std::string server;
  std::string tool;
  std::string skeleton;  // nested type tags, "unknown" when probing failed
  std::string example;   // one recorded value, canonical literal text
};

/// Structural type of a value: leaf payloads erased, shape kept.
inline std::string value_skeleton(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::None: return "none";
    case Value::Kind::Bool: return "bool";
    case Value::Kind::Int: return "int";
    case Value::Kind::Float: return "float";
    case Value::Kind::Str: return "str";
    case Value::Kind::List: {
      const ValueList& items = v.as_list();
      if (items.empty()) return "list";
      return "list[" + value_skeleton(items.front()) + "]";
    }
    case Value::Kind::Tuple: {
      const ValueList& items = v.as_tuple();
      std::string out = "tuple[";
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += value_skeleton(items[i]);
      }
      return out + "]";
    }
    case Value::Kind::Map: {
      std::string out = "{";
      const ValueMap& entries = v.as_map();
      for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) out += ", ";
        out += render(entries[i].first) + ": " + value_skeleton(entries[i].second);
      }
      return out + "}";
    }
    default: return "unknown";
  }
}

/// Stores one OutputRecord per (server, tool). Persisted as one JSON file per
/// server under the catalog directory, records sorted by tool name.
class OutputCatalog {
 public:
  void put(OutputRecord record) {
    records_[{record.server, record.tool}] = std::move(record);
  }

  std::optional<OutputRecord> lookup(const std::string& server, const std::string& tool) const {
    auto it = records_.find({server, tool});
    if (it == records_.end()) return std::nullopt;
    return it->second;
  }

  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::map<std::string, json> per_server;
    for (const auto& [key, rec] : records_) {
      json entry = {{"tool", rec.tool}, {"skeleton", rec.skeleton}, {"example", rec.example}};
      auto& arr = per_server[rec.server];
      if (!arr.is_array()) arr = json::array();
      arr.push_back(std::move(entry));
    }
    for (const auto& [server, arr] : per_server) {
      const std::filesystem::path path = dir / (sanitize_identifier(server) + ".json");
      const std::filesystem::path tmp = path.string() + ".tmp";
      {
        std::ofstream out(tmp);
        json doc = {{"server", server}, {"records", arr}};
        out << doc.dump(2) << "\n";
      }
      std::filesystem::rename(tmp, path);
    }
  }

  void load(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir)) return;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() != ".json") continue;
      std::ifstream in(entry.path());
      json doc = json::parse(in, nullptr, false);
      if (doc.is_discarded() || !doc.contains("server") || !doc.contains("records")) continue;
      const std::string server = doc["server"].get<std::string>();
      for (const json& rec : doc["records"]) {
        put(OutputRecord{server, rec.value("tool", ""), rec.value("skeleton", "unknown"),
                         rec.value("example", "")});
      }
    }
  }

  std::size_t size() const { return records_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, OutputRecord> records_;
};

/// Run each tool once with the supplied sample arguments and record the
/// output shape plus one example. Failures become "unknown" records.
inline std::vector<OutputRecord> catalog_outputs(Registry& registry, OutputCatalog& catalog,
                                                 const std::string& server,
                                                 const std::map<std::string, json>& sample_args) {
  std::vector<OutputRecord> out;
  for (const auto& [tool, args] : sample_args) {
    OutputRecord rec;
    rec.server = server;
    rec.tool = tool;
    try {
      ToolResult result = registry.call_tool(server, tool, args);
      if (result.is_error) {
        rec.skeleton = "unknown";
        rec.example = "";
      } else {
        Value v = parse_literal(result.raw_text);
        rec.skeleton = value_skeleton(v);
        rec.example = render(v);
      }
    } catch (const Error&) {
      rec.skeleton = "unknown";
      rec.example = "";
    }
    catalog.put(rec);
    out.push_back(std::move(rec));
  }
  return out;
}

/// Signature-form rendering with output skeletons and examples; the
/// token-light alternative to the raw schema blocks.
inline std::string tools_info(SignatureIndex& index, const OutputCatalog& catalog,
                              const std::string& server, const std::vector<std::string>& tools) {
  Registry& registry = index.registry();
  const std::vector<ToolSchema>& all = registry.list_tools(server);
  for (const std::string& name : tools) {
    bool found = false;
    for (const ToolSchema& t : all)
      if (t.tool == name || sanitize_identifier(t.tool) == name) found = true;
    if (!found) {
      std::string avail;
      for (const ToolSchema& t : all) {
        if (!avail.empty()) avail += ", ";
        avail += t.tool;
      }
      throw Error("unknown-tool",
                  "server '" + server + "' has no tool '" + name + "'. Available tools: [" + avail + "]");
    }
  }
  std::string out = "Tools info for server='" + server + "'";
  for (const ToolSchema& t : all) {
    bool wanted = false;
    for (const std::string& name : tools)
      if (t.tool == name || sanitize_identifier(t.tool) == name) wanted = true;
    if (!wanted) continue;
    const NormalizedSignature* sig = index.find(server, sanitize_identifier(t.tool));
    out += "\n\n";
    out += sig ? sig->text() : t.tool + "()";
    if (!t.description.empty()) out += "\n  Description: " + t.description;
    if (auto rec = catalog.lookup(server, t.tool); rec && rec->skeleton != "unknown") {
      out += "\n  Output: " + rec->skeleton;
      if (!rec->example.empty()) out += "\n  Example: " + rec->example;
    } else if (t.output_schema || t.output_example) {
      if (t.output_schema) out += "\n  Output: " + t.output_schema->dump();
      if (t.output_example) out += "\n  Example: " + *t.output_example;
    } else {
      out += "\n  Output: (output schema unknown)";
    }
  }
  return out;
}

}  // namespace toolscope
