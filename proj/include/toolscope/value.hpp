#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace toolscope {

class Value;
struct ServerObject;  // defined in script/interpreter.hpp

/// Where a value came from, when it was produced by a tool call. Drives the
/// output-access hints (the recorded output skeleton can be shown to the
/// model when it mishandles a result).
struct ToolOrigin {
  std::string server;
  std::string tool;
};

struct ServerRef {
  std::shared_ptr<ServerObject> object;
  std::string name;
};

struct BoundToolRef {
  std::shared_ptr<ServerObject> object;
  std::string server;
  std::string tool;
};

using ValueList = std::vector<Value>;
using ValueMap = std::vector<std::pair<Value, Value>>;  // insertion-ordered

struct ListRef {
  std::shared_ptr<ValueList> items = std::make_shared<ValueList>();
};
struct TupleRef {
  std::shared_ptr<ValueList> items = std::make_shared<ValueList>();
};
struct MapRef {
  std::shared_ptr<ValueMap> entries = std::make_shared<ValueMap>();
};

/// Runtime value of the orchestration language. Lists and maps have
/// reference semantics (copies alias), scalars are plain values.
class Value {
 public:
  enum class Kind { None, Bool, Int, Float, Str, List, Tuple, Map, Server, Tool };

  Value() : v_(std::monostate{}) {}
  static Value none() { return Value(); }
  static Value boolean(bool b) { return Value(Payload(b)); }
  static Value integer(std::int64_t i) { return Value(Payload(i)); }
  static Value real(double d) { return Value(Payload(d)); }
  static Value str(std::string s) { return Value(Payload(std::move(s))); }
  static Value list(ValueList items) {
    ListRef r;
    *r.items = std::move(items);
    return Value(Payload(std::move(r)));
  }
  static Value tuple(ValueList items) {
    TupleRef r;
    *r.items = std::move(items);
    return Value(Payload(std::move(r)));
  }
  static Value map(ValueMap entries) {
    MapRef r;
    *r.entries = std::move(entries);
    return Value(Payload(std::move(r)));
  }
  static Value server(ServerRef ref) { return Value(Payload(std::move(ref))); }
  static Value tool(BoundToolRef ref) { return Value(Payload(std::move(ref))); }

  Kind kind() const { return static_cast<Kind>(v_.index()); }

  bool is_none() const { return kind() == Kind::None; }
  bool is_bool() const { return kind() == Kind::Bool; }
  bool is_int() const { return kind() == Kind::Int; }
  bool is_float() const { return kind() == Kind::Float; }
  bool is_number() const { return is_int() || is_float(); }
  bool is_str() const { return kind() == Kind::Str; }
  bool is_list() const { return kind() == Kind::List; }
  bool is_tuple() const { return kind() == Kind::Tuple; }
  bool is_map() const { return kind() == Kind::Map; }
  bool is_server() const { return kind() == Kind::Server; }
  bool is_tool() const { return kind() == Kind::Tool; }

  bool as_bool() const { return std::get<bool>(v_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  double as_float() const { return std::get<double>(v_); }
  double as_number() const { return is_int() ? static_cast<double>(as_int()) : as_float(); }
  const std::string& as_str() const { return std::get<std::string>(v_); }
  ValueList& as_list() const { return *std::get<ListRef>(v_).items; }
  ValueList& as_tuple() const { return *std::get<TupleRef>(v_).items; }
  ValueMap& as_map() const { return *std::get<MapRef>(v_).entries; }
  const ServerRef& as_server() const { return std::get<ServerRef>(v_); }
  const BoundToolRef& as_tool() const { return std::get<BoundToolRef>(v_); }

  const std::shared_ptr<const ToolOrigin>& origin() const { return origin_; }
  Value with_origin(std::string server, std::string tool) const {
    Value copy = *this;
    copy.origin_ = std::make_shared<const ToolOrigin>(ToolOrigin{std::move(server), std::move(tool)});
    return copy;
  }

  /// Python-flavoured truthiness.
  bool truthy() const {
    switch (kind()) {
      case Kind::None: return false;
      case Kind::Bool: return as_bool();
      case Kind::Int: return as_int() != 0;
      case Kind::Float: return as_float() != 0.0;
      case Kind::Str: return !as_str().empty();
      case Kind::List: return !as_list().empty();
      case Kind::Tuple: return !as_tuple().empty();
      case Kind::Map: return !as_map().empty();
      default: return true;
    }
  }

  /// Language equality: numeric kinds compare by value (1 == 1.0).
  bool equals(const Value& o) const {
    if (is_number() && o.is_number()) {
      if (is_int() && o.is_int()) return as_int() == o.as_int();
      return as_number() == o.as_number();
    }
    if (kind() != o.kind()) return false;
    switch (kind()) {
      case Kind::None: return true;
      case Kind::Bool: return as_bool() == o.as_bool();
      case Kind::Str: return as_str() == o.as_str();
      case Kind::List: return seq_equal(as_list(), o.as_list());
      case Kind::Tuple: return seq_equal(as_tuple(), o.as_tuple());
      case Kind::Map: {
        const ValueMap& a = as_map();
        const ValueMap& b = o.as_map();
        if (a.size() != b.size()) return false;
        for (const auto& [k, v] : a) {
          bool found = false;
          for (const auto& [k2, v2] : b) {
            if (k.equals(k2)) {
              if (!v.equals(v2)) return false;
              found = true;
              break;
            }
          }
          if (!found) return false;
        }
        return true;
      }
      case Kind::Server: return as_server().object == o.as_server().object;
      case Kind::Tool:
        return as_tool().object == o.as_tool().object && as_tool().tool == o.as_tool().tool;
      default: return false;
    }
  }

  /// Kind-sensitive equality (1 != 1.0). Used by the round-trip oracles.
  bool strict_equals(const Value& o) const {
    if (kind() != o.kind()) return false;
    if (is_int()) return as_int() == o.as_int();
    if (is_float()) {
      double a = as_float(), b = o.as_float();
      return (a == b) || (std::isnan(a) && std::isnan(b));
    }
    if (is_list() || is_tuple()) {
      const ValueList& a = is_list() ? as_list() : as_tuple();
      const ValueList& b = is_list() ? o.as_list() : o.as_tuple();
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].strict_equals(b[i])) return false;
      return true;
    }
    if (is_map()) {
      const ValueMap& a = as_map();
      const ValueMap& b = o.as_map();
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].first.strict_equals(b[i].first) || !a[i].second.strict_equals(b[i].second))
          return false;
      return true;
    }
    return equals(o);
  }

  const char* kind_name() const {
    switch (kind()) {
      case Kind::None: return "NoneType";
      case Kind::Bool: return "bool";
      case Kind::Int: return "int";
      case Kind::Float: return "float";
      case Kind::Str: return "str";
      case Kind::List: return "list";
      case Kind::Tuple: return "tuple";
      case Kind::Map: return "dict";
      case Kind::Server: return "MCPServer";
      case Kind::Tool: return "bound tool";
    }
    return "?";
  }

 private:
  using Payload = std::variant<std::monostate, bool, std::int64_t, double, std::string,
                               ListRef, TupleRef, MapRef, ServerRef, BoundToolRef>;
  explicit Value(Payload p) : v_(std::move(p)) {}

  static bool seq_equal(const ValueList& a, const ValueList& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!a[i].equals(b[i])) return false;
    return true;
  }

  Payload v_;
  std::shared_ptr<const ToolOrigin> origin_;
};

// ---------------------------------------------------------------------------
// Rendering

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), d);
  std::string s(buf, r.ptr);
  // Keep the float-ness visible so the text parses back as a float.
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

/// Integers render bare, integral doubles drop the ".0". Matches how the
/// mock servers print results ("1555", "152.5").
inline std::string format_number_text(double d) {
  if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 9.007199254740992e15) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), static_cast<std::int64_t>(d));
    return std::string(buf, r.ptr);
  }
  return format_double(d);
}

inline std::string quote_string(const std::string& s) {
  // Python-repr quoting: prefer single quotes, switch to double quotes when
  // the text contains a single quote but no double quote.
  char q = '\'';
  if (s.find('\'') != std::string::npos && s.find('"') == std::string::npos) q = '"';
  std::string out;
  out.reserve(s.size() + 2);
  out += q;
  for (unsigned char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c == static_cast<unsigned char>(q)) {
          out += '\\';
          out += static_cast<char>(q);
        } else if (c < 0x20) {
          const char* hex = "0123456789abcdef";
          out += "\\x";
          out += hex[c >> 4];
          out += hex[c & 0xf];
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += q;
  return out;
}

namespace detail {
inline void render_value(const Value& v, std::string& out, bool display_floats);
}

/// Canonical literal rendering; parse_literal(render(v)) == v for every
/// value in the literal grammar.
inline std::string render(const Value& v) {
  std::string out;
  detail::render_value(v, out, /*display_floats=*/false);
  return out;
}

/// Final-answer style rendering: integral floats lose the trailing ".0",
/// a top-level string renders raw (like print, not repr).
inline std::string display(const Value& v) {
  if (v.is_str()) return v.as_str();
  std::string out;
  detail::render_value(v, out, /*display_floats=*/true);
  return out;
}

namespace detail {
inline void render_value(const Value& v, std::string& out, bool display_floats) {
  switch (v.kind()) {
    case Value::Kind::None: out += "None"; return;
    case Value::Kind::Bool: out += v.as_bool() ? "True" : "False"; return;
    case Value::Kind::Int: {
      char buf[32];
      auto r = std::to_chars(buf, buf + sizeof(buf), v.as_int());
      out.append(buf, r.ptr);
      return;
    }
    case Value::Kind::Float:
      out += display_floats ? format_number_text(v.as_float()) : format_double(v.as_float());
      return;
    case Value::Kind::Str: out += quote_string(v.as_str()); return;
    case Value::Kind::List: {
      out += '[';
      const ValueList& items = v.as_list();
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        render_value(items[i], out, display_floats);
      }
      out += ']';
      return;
    }
    case Value::Kind::Tuple: {
      const ValueList& items = v.as_tuple();
      out += '(';
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        render_value(items[i], out, display_floats);
      }
      if (items.size() == 1) out += ',';
      out += ')';
      return;
    }
    case Value::Kind::Map: {
      out += '{';
      const ValueMap& entries = v.as_map();
      for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) out += ", ";
        render_value(entries[i].first, out, display_floats);
        out += ": ";
        render_value(entries[i].second, out, display_floats);
      }
      out += '}';
      return;
    }
    case Value::Kind::Server:
      out += "<MCPServer " + quote_string(v.as_server().name) + ">";
      return;
    case Value::Kind::Tool:
      out += "<tool " + v.as_tool().server + ":" + v.as_tool().tool + ">";
      return;
  }
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Literal parsing (tool responses arrive as serialized text)

namespace detail {

struct LiteralParser {
  std::string_view s;
  std::size_t i = 0;
  int depth = 0;
  static constexpr int kMaxDepth = 64;

  struct Fail {};

  void ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool eof() const { return i >= s.size(); }
  char peek() const { return s[i]; }
  bool match_word(std::string_view w) {
    if (s.compare(i, w.size(), w) != 0) return false;
    const std::size_t end = i + w.size();
    if (end < s.size()) {
      unsigned char c = static_cast<unsigned char>(s[end]);
      if (std::isalnum(c) || c == '_') return false;
    }
    i = end;
    return true;
  }

  Value parse_value() {
    if (++depth > kMaxDepth) throw Fail{};
    Value v = parse_value_inner();
    --depth;
    return v;
  }

  Value parse_value_inner() {
    ws();
    if (eof()) throw Fail{};
    char c = peek();
    if (c == '[') return parse_list();
    if (c == '(') return parse_tuple();
    if (c == '{') return parse_map();
    if (c == '\'' || c == '"') return Value::str(parse_string());
    if (match_word("None") || match_word("null")) return Value::none();
    if (match_word("True") || match_word("true")) return Value::boolean(true);
    if (match_word("False") || match_word("false")) return Value::boolean(false);
    if (c == '+' || c == '-' || c == '.' || std::isdigit(static_cast<unsigned char>(c)))
      return parse_number();
    throw Fail{};
  }

  Value parse_number() {
    const std::size_t start = i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    bool digits = false, dot = false, exp = false;
    while (i < s.size()) {
      char c = s[i];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digits = true;
        ++i;
      } else if (c == '.' && !dot && !exp) {
        dot = true;
        ++i;
      } else if ((c == 'e' || c == 'E') && digits && !exp) {
        exp = true;
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
      } else {
        break;
      }
    }
    if (!digits) throw Fail{};
    std::string_view text = s.substr(start, i - start);
    if (!dot && !exp) {
      std::int64_t iv = 0;
      auto r = std::from_chars(text.data(), text.data() + text.size(), iv);
      if (r.ec == std::errc() && r.ptr == text.data() + text.size()) return Value::integer(iv);
      // out of int64 range: fall back to double
    }
    double dv = 0;
    auto r = std::from_chars(text.data(), text.data() + text.size(), dv);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) throw Fail{};
    return Value::real(dv);
  }

  std::string parse_string() {
    const char q = s[i++];
    std::string out;
    while (true) {
      if (eof()) throw Fail{};
      char c = s[i++];
      if (c == q) break;
      if (c == '\\') {
        if (eof()) throw Fail{};
        char e = s[i++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '\\': out += '\\'; break;
          case '\'': out += '\''; break;
          case '"': out += '"'; break;
          case '0': out += '\0'; break;
          case 'x': {
            if (i + 1 >= s.size()) throw Fail{};
            auto hex = [](char h) -> int {
              if (h >= '0' && h <= '9') return h - '0';
              if (h >= 'a' && h <= 'f') return h - 'a' + 10;
              if (h >= 'A' && h <= 'F') return h - 'A' + 10;
              return -1;
            };
            int hi = hex(s[i]), lo = hex(s[i + 1]);
            if (hi < 0 || lo < 0) throw Fail{};
            out += static_cast<char>(hi * 16 + lo);
            i += 2;
            break;
          }
          default:
            // Unknown escape: keep it verbatim, like a raw backslash.
            out += '\\';
            out += e;
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  Value parse_list() {
    ++i;  // '['
    ValueList items;
    ws();
    if (!eof() && peek() == ']') {
      ++i;
      return Value::list(std::move(items));
    }
    while (true) {
      items.push_back(parse_value());
      ws();
      if (eof()) throw Fail{};
      if (peek() == ',') {
        ++i;
        ws();
        if (!eof() && peek() == ']') {  // trailing comma
          ++i;
          break;
        }
        continue;
      }
      if (peek() == ']') {
        ++i;
        break;
      }
      throw Fail{};
    }
    return Value::list(std::move(items));
  }

  Value parse_tuple() {
    ++i;  // '('
    ValueList items;
    ws();
    if (!eof() && peek() == ')') {
      ++i;
      return Value::tuple(std::move(items));
    }
    bool saw_comma = false;
    while (true) {
      items.push_back(parse_value());
      ws();
      if (eof()) throw Fail{};
      if (peek() == ',') {
        saw_comma = true;
        ++i;
        ws();
        if (!eof() && peek() == ')') {
          ++i;
          break;
        }
        continue;
      }
      if (peek() == ')') {
        ++i;
        break;
      }
      throw Fail{};
    }
    if (items.size() == 1 && !saw_comma) return std::move(items[0]);  // parenthesised value
    return Value::tuple(std::move(items));
  }

  Value parse_map() {
    ++i;  // '{'
    ValueMap entries;
    ws();
    if (!eof() && peek() == '}') {
      ++i;
      return Value::map(std::move(entries));
    }
    while (true) {
      Value key = parse_value();
      if (key.is_list() || key.is_map() || key.is_server() || key.is_tool()) throw Fail{};
      ws();
      if (eof() || peek() != ':') throw Fail{};
      ++i;
      Value val = parse_value();
      entries.emplace_back(std::move(key), std::move(val));
      ws();
      if (eof()) throw Fail{};
      if (peek() == ',') {
        ++i;
        ws();
        if (!eof() && peek() == '}') {
          ++i;
          break;
        }
        continue;
      }
      if (peek() == '}') {
        ++i;
        break;
      }
      throw Fail{};
    }
    return Value::map(std::move(entries));
  }
};

}  // namespace detail

/// Parse serialized tool output into a Value, top-down: containers first,
/// then primitives. Accepts Python literals plus the JSON spellings
/// true/false/null. Text outside the grammar is returned unchanged as a
/// string value; this never fails.
inline Value parse_literal(std::string_view text) {
  detail::LiteralParser p{text};
  try {
    Value v = p.parse_value();
    p.ws();
    if (!p.eof()) return Value::str(std::string(text));
    return v;
  } catch (...) {
    return Value::str(std::string(text));
  }
}

}  // namespace toolscope
