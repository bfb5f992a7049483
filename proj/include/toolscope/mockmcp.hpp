#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "toolscope/protocol.hpp"
#include "toolscope/tokens.hpp"
#include "toolscope/value.hpp"

namespace toolscope {

struct MockToolOutcome {
  std::string text;
  bool is_error = false;
};

using MockBehavior = std::function<MockToolOutcome(const json& args)>;

struct MockToolSpec {
  std::string name;
  std::string description;
  json input_schema = json::object();
  std::optional<json> output_schema;
  std::optional<std::string> output_example;
  MockBehavior behavior;
};

/// Deterministic in-process MCP server. The same object answers in-process
/// calls, or can be served over stdio / HTTP for external clients.
class MockServer : public McpHandler {
 public:
  explicit MockServer(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  void add_tool(MockToolSpec spec) { tools_.push_back(std::move(spec)); }

  const std::vector<MockToolSpec>& tools() const { return tools_; }

  /// Number of JSON-RPC requests handled; used by cache tests.
  int request_count() const { return request_count_.load(); }

  json handle(const json& request) override {
    request_count_.fetch_add(1);
    const std::string method = request.value("method", "");
    const bool is_notification = !request.contains("id") || request["id"].is_null();
    if (is_notification) return json();

    json resp = {{"jsonrpc", "2.0"}, {"id", request["id"]}};
    if (method == "initialize") {
      resp["result"] = {{"protocolVersion", request["params"].value("protocolVersion", "2025-06-18")},
                        {"capabilities", {{"tools", json::object()}}},
                        {"serverInfo", {{"name", name_}, {"version", "0.1"}}}};
      return resp;
    }
    if (method == "tools/list") {
      json tools = json::array();
      for (const MockToolSpec& t : tools_) {
        json entry = {{"name", t.name}, {"description", t.description}, {"inputSchema", t.input_schema}};
        if (t.output_schema) entry["outputSchema"] = *t.output_schema;
        if (t.output_example) entry["outputExample"] = *t.output_example;
        tools.push_back(std::move(entry));
      }
      resp["result"] = {{"tools", std::move(tools)}};
      return resp;
    }
    if (method == "tools/call") {
      const std::string tool = request["params"].value("name", "");
      const json args = request["params"].value("arguments", json::object());
      for (const MockToolSpec& t : tools_) {
        if (t.name == tool) {
          MockToolOutcome out = t.behavior(args);
          resp["result"] = {{"content", json::array({{{"type", "text"}, {"text", out.text}}})},
                            {"isError", out.is_error}};
          return resp;
        }
      }
      resp["error"] = {{"code", -32602}, {"message", "Unknown tool: " + tool}};
      return resp;
    }
    resp["error"] = {{"code", -32601}, {"message", "Method not found: " + method}};
    return resp;
  }

  /// Serve newline-delimited JSON-RPC on stdin/stdout until EOF.
  void serve_stdio(std::istream& in = std::cin, std::ostream& out = std::cout) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json request = json::parse(line, nullptr, false);
      if (request.is_discarded()) continue;
      json resp = handle(request);
      if (!resp.is_null()) out << resp.dump() << "\n" << std::flush;
    }
  }

  /// Serve JSON-RPC over HTTP POST; blocks until the server is stopped.
  bool serve_http(const std::string& host, int port) {
    httplib::Server server;
    server.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
      json request = json::parse(req.body, nullptr, false);
      if (request.is_discarded()) {
        res.status = 400;
        return;
      }
      json resp = handle(request);
      res.set_content(resp.is_null() ? "{}" : resp.dump(), "application/json");
    });
    return server.listen(host, port);
  }

 private:
  std::string name_;
  std::vector<MockToolSpec> tools_;
  std::atomic<int> request_count_{0};
};

// ---------------------------------------------------------------------------
// Math MCP

namespace mockdetail {

inline MockToolOutcome tool_error(std::string msg) { return {std::move(msg), true}; }

inline bool number_list(const json& args, std::vector<double>& out, MockToolOutcome& err) {
  if (!args.contains("numbers")) {
    err = tool_error("invalid arguments: missing required argument 'numbers'");
    return false;
  }
  const json& arr = args["numbers"];
  if (!arr.is_array() || arr.empty()) {
    err = tool_error("invalid argument 'numbers': expected a non-empty array of numbers");
    return false;
  }
  for (const json& x : arr) {
    if (!x.is_number()) {
      err = tool_error("invalid argument 'numbers': expected a non-empty array of numbers");
      return false;
    }
    out.push_back(x.get<double>());
  }
  return true;
}

inline bool one_number(const json& args, const char* key, double& out, MockToolOutcome& err) {
  if (!args.contains(key)) {
    err = tool_error(std::string("invalid arguments: missing required argument '") + key + "'");
    return false;
  }
  if (!args[key].is_number()) {
    err = tool_error(std::string("invalid argument '") + key + "': expected a number");
    return false;
  }
  out = args[key].get<double>();
  return true;
}

inline json number_schema(const std::string& description) {
  return json{{"type", "number"}, {"description", description}};
}

inline json binary_schema(const std::string& first_desc, const std::string& second_desc) {
  return json{{"type", "object"},
              {"properties",
               {{"firstNumber", number_schema(first_desc)}, {"secondNumber", number_schema(second_desc)}}},
              {"required", json::array({"firstNumber", "secondNumber"})},
              {"additionalProperties", false}};
}

inline json list_schema(const std::string& description) {
  return json{{"type", "object"},
              {"properties",
               {{"numbers",
                 {{"type", "array"}, {"items", {{"type", "number"}}}, {"description", description}}}}},
              {"required", json::array({"numbers"})},
              {"additionalProperties", false}};
}

inline json unary_schema(const std::string& description) {
  return json{{"type", "object"},
              {"properties", {{"number", number_schema(description)}}},
              {"required", json::array({"number"})},
              {"additionalProperties", false}};
}

}  // namespace mockdetail

struct MathServerOptions {
  /// Reproduces the recorded live-server behavior where `median` answered
  /// "undefined"; the default implements the correct median.
  bool undefined_median = false;
};

inline std::shared_ptr<MockServer> make_math_server(MathServerOptions options = {}) {
  using namespace mockdetail;
  auto server = std::make_shared<MockServer>("Math MCP");

  auto binary = [server](const std::string& name, const std::string& description,
                         const std::string& first_desc, const std::string& second_desc,
                         std::function<MockToolOutcome(double, double)> fn) {
    MockToolSpec spec;
    spec.name = name;
    spec.description = description;
    spec.input_schema = binary_schema(first_desc, second_desc);
    spec.behavior = [fn = std::move(fn)](const json& args) -> MockToolOutcome {
      MockToolOutcome err;
      double a = 0, b = 0;
      if (!one_number(args, "firstNumber", a, err)) return err;
      if (!one_number(args, "secondNumber", b, err)) return err;
      return fn(a, b);
    };
    server->add_tool(std::move(spec));
  };

  auto aggregate = [server](const std::string& name, const std::string& description,
                            const std::string& list_desc,
                            std::function<MockToolOutcome(const std::vector<double>&)> fn) {
    MockToolSpec spec;
    spec.name = name;
    spec.description = description;
    spec.input_schema = list_schema(list_desc);
    spec.behavior = [fn = std::move(fn)](const json& args) -> MockToolOutcome {
      MockToolOutcome err;
      std::vector<double> xs;
      if (!number_list(args, xs, err)) return err;
      return fn(xs);
    };
    server->add_tool(std::move(spec));
  };

  auto unary = [server](const std::string& name, const std::string& description,
                        const std::string& arg_desc, std::function<double(double)> fn) {
    MockToolSpec spec;
    spec.name = name;
    spec.description = description;
    spec.input_schema = unary_schema(arg_desc);
    spec.behavior = [fn = std::move(fn)](const json& args) -> MockToolOutcome {
      MockToolOutcome err;
      double x = 0;
      if (!one_number(args, "number", x, err)) return err;
      return {format_number_text(fn(x)), false};
    };
    server->add_tool(std::move(spec));
  };

  binary("add", "Adds two numbers together", "The first addend", "The second addend",
         [](double a, double b) -> MockToolOutcome { return {format_number_text(a + b), false}; });
  binary("subtract", "Subtracts the second number from the first", "The number to subtract from",
         "The number to subtract",
         [](double a, double b) -> MockToolOutcome { return {format_number_text(a - b), false}; });
  binary("multiply", "Multiplies two numbers together", "The first factor", "The second factor",
         [](double a, double b) -> MockToolOutcome { return {format_number_text(a * b), false}; });
  binary("division", "Divides the first number by the second", "The dividend", "The divisor",
         [](double a, double b) -> MockToolOutcome {
           if (b == 0.0) return mockdetail::tool_error("division by zero");
           return {format_number_text(a / b), false};
         });

  aggregate("sum", "Adds any number of numbers together", "The numbers to add",
            [](const std::vector<double>& xs) -> MockToolOutcome {
              double total = 0;
              for (double x : xs) total += x;
              return {format_number_text(total), false};
            });
  aggregate("mean", "Calculates the arithmetic mean of a list of numbers", "The list of numbers",
            [](const std::vector<double>& xs) -> MockToolOutcome {
              double total = 0;
              for (double x : xs) total += x;
              return {format_number_text(total / static_cast<double>(xs.size())), false};
            });

  {
    MockToolSpec spec;
    spec.name = "median";
    spec.description = "Calculates the median of a list of numbers";
    spec.input_schema = list_schema("The list of numbers");
    const bool undefined = options.undefined_median;
    spec.behavior = [undefined](const json& args) -> MockToolOutcome {
      MockToolOutcome err;
      std::vector<double> xs;
      if (!number_list(args, xs, err)) return err;
      if (undefined) return {"undefined", false};
      std::sort(xs.begin(), xs.end());
      const std::size_t n = xs.size();
      const double med = (n % 2 == 1) ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
      return {format_number_text(med), false};
    };
    server->add_tool(std::move(spec));
  }

  aggregate("mode", "Finds the most common number(s) in a list", "The list of numbers",
            [](const std::vector<double>& xs) -> MockToolOutcome {
              std::map<double, int> counts;
              for (double x : xs) counts[x]++;
              int best = 0;
              for (const auto& [v, c] : counts) best = std::max(best, c);
              std::string entries;
              if (best == 1) {
                // No repeats: report the largest candidate, deterministically.
                entries = format_number_text(counts.rbegin()->first);
              } else {
                bool first = true;
                for (const auto& [v, c] : counts) {
                  if (c != best) continue;
                  if (!first) entries += ", ";
                  entries += format_number_text(v);
                  first = false;
                }
              }
              return {"Entries (" + entries + ") appeared " + std::to_string(best) + " times", false};
            });
  aggregate("min", "Finds the minimum value in a list of numbers", "The list of numbers",
            [](const std::vector<double>& xs) -> MockToolOutcome {
              return {format_number_text(*std::min_element(xs.begin(), xs.end())), false};
            });
  aggregate("max", "Finds the maximum value in a list of numbers", "The list of numbers",
            [](const std::vector<double>& xs) -> MockToolOutcome {
              return {format_number_text(*std::max_element(xs.begin(), xs.end())), false};
            });

  unary("floor", "Rounds a number down to the nearest integer", "The number to round down",
        [](double x) { return std::floor(x); });
  unary("ceiling", "Rounds a number up to the nearest integer", "The number to round up",
        [](double x) { return std::ceil(x); });
  unary("round", "Rounds a number to the nearest integer (half away from zero)",
        "The number to round", [](double x) { return std::round(x); });

  return server;
}

// ---------------------------------------------------------------------------
// Time MCP

struct TimeServerOptions {
  /// Injectable clock; tests pin it to a fixed instant.
  std::function<std::int64_t()> clock = [] { return static_cast<std::int64_t>(::time(nullptr)); };
};

namespace mockdetail {

// Fixed standard offsets, minutes east of UTC. No DST; the mock promises
// referential transparency given (args, clock), not civil accuracy.
inline const std::map<std::string, int>& zone_offsets() {
  static const std::map<std::string, int> zones = {
      {"UTC", 0},
      {"Etc/UTC", 0},
      {"Europe/London", 0},
      {"Europe/Paris", 60},
      {"Europe/Berlin", 60},
      {"America/New_York", -300},
      {"America/Chicago", -360},
      {"America/Denver", -420},
      {"America/Los_Angeles", -480},
      {"Asia/Tokyo", 540},
      {"Asia/Shanghai", 480},
      {"Asia/Kolkata", 330},
      {"Australia/Sydney", 600},
  };
  return zones;
}

// Howard Hinnant's civil-date algorithms.
inline std::int64_t days_from_civil(std::int64_t y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 +
                       static_cast<unsigned>(d) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, std::int64_t& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y += (m <= 2);
}

inline std::string iso_with_offset(std::int64_t utc_seconds, int offset_minutes) {
  const std::int64_t local = utc_seconds + static_cast<std::int64_t>(offset_minutes) * 60;
  std::int64_t days = local / 86400;
  std::int64_t rem = local % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t y;
  int m, d;
  civil_from_days(days, y, m, d);
  const int hh = static_cast<int>(rem / 3600);
  const int mm = static_cast<int>((rem % 3600) / 60);
  const int ss = static_cast<int>(rem % 60);
  char buf[48];
  const char sign = offset_minutes < 0 ? '-' : '+';
  const int off = std::abs(offset_minutes);
  std::snprintf(buf, sizeof(buf), "%04lld-%02d-%02dT%02d:%02d:%02d%c%02d:%02d",
                static_cast<long long>(y), m, d, hh, mm, ss, sign, off / 60, off % 60);
  return buf;
}

inline bool parse_iso_naive(const std::string& text, std::int64_t& seconds) {
  int y, mo, d, h, mi, s = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s) < 5) return false;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60)
    return false;
  seconds = days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
  return true;
}

}  // namespace mockdetail

inline std::shared_ptr<MockServer> make_time_server(TimeServerOptions options = {}) {
  using namespace mockdetail;
  auto server = std::make_shared<MockServer>("Time MCP");

  {
    MockToolSpec spec;
    spec.name = "get_current_time";
    spec.description = "Get current time in a specific timezone";
    spec.input_schema =
        json{{"type", "object"},
             {"properties",
              {{"timezone",
                {{"type", "string"},
                 {"description", "IANA timezone name (e.g. 'America/New_York')"}}}}},
             {"required", json::array({"timezone"})},
             {"additionalProperties", false}};
    spec.behavior = [clock = options.clock](const json& args) -> MockToolOutcome {
      if (!args.contains("timezone") || !args["timezone"].is_string())
        return tool_error("invalid arguments: missing required argument 'timezone'");
      const std::string tz = args["timezone"].get<std::string>();
      auto it = zone_offsets().find(tz);
      if (it == zone_offsets().end())
        return tool_error("invalid argument 'timezone': unknown timezone '" + tz + "'");
      return {iso_with_offset(clock(), it->second), false};
    };
    server->add_tool(std::move(spec));
  }

  {
    MockToolSpec spec;
    spec.name = "convert_time";
    spec.description = "Convert a timestamp between timezones";
    spec.input_schema =
        json{{"type", "object"},
             {"properties",
              {{"time",
                {{"type", "string"},
                 {"description", "Time to convert, ISO format (YYYY-MM-DDTHH:MM:SS)"}}},
               {"source_timezone", {{"type", "string"}, {"description", "Timezone of the input time"}}},
               {"target_timezone", {{"type", "string"}, {"description", "Timezone to convert into"}}}}},
             {"required", json::array({"time", "source_timezone", "target_timezone"})},
             {"additionalProperties", false}};
    spec.behavior = [](const json& args) -> MockToolOutcome {
      for (const char* key : {"time", "source_timezone", "target_timezone"}) {
        if (!args.contains(key) || !args[key].is_string())
          return tool_error(std::string("invalid arguments: missing required argument '") + key + "'");
      }
      const std::string time_text = args["time"].get<std::string>();
      const std::string from = args["source_timezone"].get<std::string>();
      const std::string to = args["target_timezone"].get<std::string>();
      auto from_it = zone_offsets().find(from);
      if (from_it == zone_offsets().end())
        return tool_error("invalid argument 'source_timezone': unknown timezone '" + from + "'");
      auto to_it = zone_offsets().find(to);
      if (to_it == zone_offsets().end())
        return tool_error("invalid argument 'target_timezone': unknown timezone '" + to + "'");
      if (from == to) return {time_text, false};  // same-zone identity
      std::int64_t naive = 0;
      if (!parse_iso_naive(time_text, naive))
        return tool_error("invalid argument 'time': expected ISO format YYYY-MM-DDTHH:MM:SS");
      const std::int64_t utc = naive - static_cast<std::int64_t>(from_it->second) * 60;
      return {iso_with_offset(utc, to_it->second), false};
    };
    server->add_tool(std::move(spec));
  }

  return server;
}

// ---------------------------------------------------------------------------
// BigPayload MCP (truncation fixture)

inline std::string make_payload_text(std::size_t size_tokens) {
  std::string out;
  out.reserve(size_tokens * 7);
  for (std::size_t i = 0; i < size_tokens; ++i) {
    if (i) out += ' ';
    out += "blob";
    out += std::to_string(i);
  }
  return out;
}

inline std::shared_ptr<MockServer> make_bigpayload_server(std::size_t size_tokens) {
  auto server = std::make_shared<MockServer>("BigPayload MCP");
  MockToolSpec spec;
  spec.name = "fetch_blob";
  spec.description = "Returns a deterministic text blob of a configured token size";
  spec.input_schema = json{{"type", "object"},
                           {"properties", json::object()},
                           {"required", json::array()},
                           {"additionalProperties", false}};
  spec.behavior = [size_tokens](const json&) -> MockToolOutcome {
    return {make_payload_text(size_tokens), false};
  };
  server->add_tool(std::move(spec));
  return server;
}

// ---------------------------------------------------------------------------
// Demo MCP (exposure-policy fixture)

/// A fixture server with N uniform tools and deliberately verbose schemas,
/// used to measure context growth across exposure policies.
inline std::shared_ptr<MockServer> make_demo_server(const std::string& name,
                                                    const std::string& prefix,
                                                    std::size_t tool_count) {
  auto server = std::make_shared<MockServer>(name);
  for (std::size_t i = 1; i <= tool_count; ++i) {
    char suffix[8];
    std::snprintf(suffix, sizeof(suffix), "%02zu", i);
    const std::string tool = prefix + "_op" + suffix;
    MockToolSpec spec;
    spec.name = tool;
    spec.description = "Demo operation " + std::string(suffix) + " of the " + name +
                       " fixture server. Accepts a free-text query with optional paging and "
                       "verbosity controls, and echoes a deterministic structured result that "
                       "identifies the server and tool that handled the request.";
    spec.input_schema =
        json{{"type", "object"},
             {"properties",
              {{"query",
                {{"type", "string"},
                 {"description",
                  "Free-text request describing what this demo operation should echo back"}}},
               {"limit",
                {{"type", "integer"},
                 {"description", "Maximum number of echoed entries to include in the result"},
                 {"default", 20},
                 {"maximum", 100}}},
               {"verbose",
                {{"type", "boolean"},
                 {"description", "Include the full request context in the echoed result"},
                 {"default", false}}}}},
             {"required", json::array({"query"})},
             {"additionalProperties", false}};
    spec.behavior = [name, tool](const json& args) -> MockToolOutcome {
      if (!args.contains("query") || !args["query"].is_string())
        return mockdetail::tool_error("invalid arguments: missing required argument 'query'");
      return {"{'server': '" + name + "', 'tool': '" + tool + "', 'echo': '" +
                  args["query"].get<std::string>() + "', 'status': 'ok'}",
              false};
    };
    server->add_tool(std::move(spec));
  }
  return server;
}

/// Mock factory by kind name, as used by the `mock` CLI subcommand and the
/// in-process descriptor loader. Options come from the descriptor env map:
/// "epoch" (time), "size_tokens" (bigpayload), "quirk" (math),
/// "prefix"/"tools"/"name" (demo).
inline std::shared_ptr<MockServer> make_mock_server(const std::string& kind,
                                                    const std::map<std::string, std::string>& options = {}) {
  auto opt = [&options](const char* key) -> std::optional<std::string> {
    auto it = options.find(key);
    if (it == options.end()) return std::nullopt;
    return it->second;
  };
  if (kind == "math") {
    MathServerOptions mo;
    if (auto q = opt("quirk")) mo.undefined_median = (*q == "undefined-median");
    return make_math_server(mo);
  }
  if (kind == "time") {
    TimeServerOptions to;
    if (auto e = opt("epoch")) {
      const std::int64_t epoch = std::stoll(*e);
      to.clock = [epoch] { return epoch; };
    }
    return make_time_server(to);
  }
  if (kind == "bigpayload") {
    std::size_t size = 4001;
    if (auto s = opt("size_tokens")) size = static_cast<std::size_t>(std::stoull(*s));
    return make_bigpayload_server(size);
  }
  if (kind == "demo") {
    std::string prefix = opt("prefix").value_or("demo");
    std::size_t tools = 10;
    if (auto t = opt("tools")) tools = static_cast<std::size_t>(std::stoull(*t));
    std::string name = opt("name").value_or(prefix + " Tools");
    return make_demo_server(name, prefix, tools);
  }
  throw Error("unknown-mock",
              "no mock server kind '" + kind + "' (expected math, time, bigpayload or demo)");
}

}  // namespace toolscope
