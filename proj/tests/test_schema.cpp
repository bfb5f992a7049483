#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "toolscope/mockmcp.hpp"
#include "toolscope/schema.hpp"
#include "toolscope/tokens.hpp"

using namespace toolscope;

namespace {

ToolSchema home_manager_schema() {
  ToolSchema schema;
  schema.server = "Home";
  schema.tool = "home_manager_search";
  schema.description = "Search home manager options";
  schema.input_schema =
      json{{"type", "object"},
           {"properties",
            {{"query", {{"type", "string"}, {"description", "Search query"}}},
             {"limit", {{"type", "integer"}, {"default", 20}, {"maximum", 100}}}}},
           {"required", json::array({"query"})}};
  return schema;
}

std::unique_ptr<Registry> fixture_registry() {
  auto registry = std::make_unique<Registry>();
  registry->register_handler("Math MCP", make_math_server(), "mock:math");
  TimeServerOptions t;
  t.clock = [] { return std::int64_t{0}; };
  registry->register_handler("Time MCP", make_time_server(t), "mock:time");
  return registry;
}

}  // namespace

TEST_CASE("sanitize_identifier rules") {
  CHECK(sanitize_identifier("Get-Current Time!") == "get_current_time");
  CHECK(sanitize_identifier("already_fine") == "already_fine");
  CHECK(sanitize_identifier("123abc") == "abc");
  CHECK(sanitize_identifier("__x__") == "x");
  CHECK(sanitize_identifier("A--B") == "a_b");
  CHECK_THROWS_AS(sanitize_identifier("!!!"), Error);
  CHECK_THROWS_AS(sanitize_identifier("123"), Error);
}

TEST_CASE("normalize renders the documented signature text") {
  NormalizedSignature sig = normalize(home_manager_schema());
  CHECK(sig.function_name == "home_manager_search");
  CHECK(sig.text() ==
        "home_manager_search(query: str (required), limit: int (optional, default=20, max=100))");
  CHECK(sig.wire_name("query") == "query");
  CHECK(verify_normalization(sig, home_manager_schema()));
}

TEST_CASE("normalize preserves wire names through sanitization") {
  ToolSchema schema;
  schema.server = "S";
  schema.tool = "Get-Current Time!";
  schema.input_schema = json{{"type", "object"},
                             {"properties", {{"Time-Zone", {{"type", "string"}}}}},
                             {"required", json::array({"Time-Zone"})}};
  NormalizedSignature sig = normalize(schema);
  CHECK(sig.function_name == "get_current_time");
  REQUIRE(sig.params.size() == 1);
  CHECK(sig.params[0].name == "time_zone");
  CHECK(sig.wire_name("time_zone") == "Time-Zone");
  CHECK(verify_normalization(sig, schema));
}

TEST_CASE("empty parameter list renders as name()") {
  ToolSchema schema;
  schema.server = "S";
  schema.tool = "ping";
  schema.input_schema = json{{"type", "object"}, {"properties", json::object()}};
  CHECK(normalize(schema).text() == "ping()");
}

TEST_CASE("normalize is idempotent") {
  NormalizedSignature sig = normalize(home_manager_schema());
  // Reconstruct a schema from the signature and normalize again.
  ToolSchema rebuilt;
  rebuilt.server = sig.server;
  rebuilt.tool = sig.function_name;
  json props = json::object();
  json required = json::array();
  for (const NormalizedParam& p : sig.params) {
    json prop = json::object();
    prop["type"] = p.type == "int"     ? "integer"
                   : p.type == "float" ? "number"
                   : p.type == "str"   ? "string"
                   : p.type == "bool"  ? "boolean"
                   : p.type == "list"  ? "array"
                   : p.type == "map"   ? "object"
                                       : json(nullptr);
    if (prop["type"].is_null()) prop.erase("type");
    if (p.default_value) prop["default"] = *p.default_value;
    if (p.max_value) prop["maximum"] = *p.max_value;
    if (p.min_value) prop["minimum"] = *p.min_value;
    props[p.name] = prop;
    if (p.required) required.push_back(p.name);
  }
  rebuilt.input_schema = json{{"type", "object"}, {"properties", props}, {"required", required}};
  NormalizedSignature again = normalize(rebuilt);
  CHECK(again.function_name == sig.function_name);
  CHECK(again.text() == sig.text());
}

TEST_CASE("sanitization collisions are an error, not a silent rename") {
  ToolSchema schema;
  schema.server = "S";
  schema.tool = "t";
  schema.input_schema = json{{"type", "object"},
                             {"properties", {{"a-b", {{"type", "string"}}}, {"a b", {{"type", "string"}}}}}};
  CHECK_THROWS_AS(normalize(schema), Error);
}

TEST_CASE("malformed schemas are rejected") {
  ToolSchema schema;
  schema.server = "S";
  schema.tool = "t";
  schema.input_schema = json{{"type", "object"},
                             {"properties", {{"x", {{"type", 42}}}}}};
  CHECK_THROWS_AS(normalize(schema), Error);

  schema.input_schema = json{{"type", "object"},
                             {"properties", json::object()},
                             {"required", json::array({"ghost"})}};
  CHECK_THROWS_AS(normalize(schema), Error);
}

TEST_CASE("type arrays take the first alternative") {
  ToolSchema schema;
  schema.server = "S";
  schema.tool = "t";
  schema.input_schema =
      json{{"type", "object"},
           {"properties", {{"x", {{"type", json::array({"string", "null"})}}}}}};
  NormalizedSignature sig = normalize(schema);
  CHECK(sig.params[0].type == "str");
}

TEST_CASE("render_tool_names matches the prompt layout") {
  auto registry_ptr = fixture_registry();
  Registry& registry = *registry_ptr;
  CHECK(render_tool_names(registry, "Time MCP") ==
        "Server: 'Time MCP'\nAvailable Tools: get_current_time, convert_time");
  CHECK(render_tool_names(registry, "Math MCP") ==
        "Server: 'Math MCP'\nAvailable Tools: add, subtract, multiply, division, sum, mean, median, "
        "mode, min, max, floor, ceiling, round");
}

TEST_CASE("render_full_schemas matches the transcript layout") {
  auto registry_ptr = fixture_registry();
  Registry& registry = *registry_ptr;
  std::string block = render_full_schemas(registry, "Math MCP", std::vector<std::string>{"add"});
  CHECK(block.find("Tools in server='Math MCP'") == 0);
  CHECK(block.find("Tool: `Math MCP:add` (Server: Math MCP)") != std::string::npos);
  CHECK(block.find("  Description: Adds two numbers together") != std::string::npos);
  CHECK(block.find("\"The first addend\"") != std::string::npos);
  CHECK(block.find("\"additionalProperties\": false") != std::string::npos);

  CHECK_THROWS_AS(render_full_schemas(registry, "Math MCP", std::vector<std::string>{"nope"}), Error);
  // Empty subset renders just the header.
  CHECK(render_full_schemas(registry, "Math MCP", std::vector<std::string>{}) ==
        "Tools in server='Math MCP'");
}

TEST_CASE("names-only block is cheaper than the full schema block") {
  auto registry_ptr = fixture_registry();
  Registry& registry = *registry_ptr;
  TokenCounter counter;
  CHECK(counter(render_tool_names(registry, "Math MCP")) <
        counter(render_full_schemas(registry, "Math MCP")));
}

TEST_CASE("catalog_outputs records skeletons and examples") {
  auto registry_ptr = fixture_registry();
  Registry& registry = *registry_ptr;
  OutputCatalog catalog;
  std::map<std::string, json> math_samples = {{"sum", json{{"numbers", {1, 2}}}},
                                              {"mean", json{{"numbers", {1, 2}}}}};
  catalog_outputs(registry, catalog, "Math MCP", math_samples);
  auto sum_rec = catalog.lookup("Math MCP", "sum");
  REQUIRE(sum_rec.has_value());
  CHECK(sum_rec->skeleton == "int");
  CHECK(sum_rec->example == "3");
  auto mean_rec = catalog.lookup("Math MCP", "mean");
  CHECK(mean_rec->skeleton == "float");

  std::map<std::string, json> time_samples = {{"get_current_time", json{{"timezone", "UTC"}}}};
  catalog_outputs(registry, catalog, "Time MCP", time_samples);
  CHECK(catalog.lookup("Time MCP", "get_current_time")->skeleton == "str");

  // A tool that always errors yields an unknown skeleton, not a fatal error.
  std::map<std::string, json> bad = {{"division", json{{"firstNumber", 1}, {"secondNumber", 0}}}};
  catalog_outputs(registry, catalog, "Math MCP", bad);
  CHECK(catalog.lookup("Math MCP", "division")->skeleton == "unknown");
}

TEST_CASE("value_skeleton erases leaves but keeps shape") {
  CHECK(value_skeleton(parse_literal("3")) == "int");
  CHECK(value_skeleton(parse_literal("'x'")) == "str");
  CHECK(value_skeleton(parse_literal("[{'a': 1, 'b': 'x'}]")) == "list[{'a': int, 'b': str}]");
  CHECK(value_skeleton(parse_literal("(1, 'a')")) == "tuple[int, str]");
}

TEST_CASE("catalog persists one file per server and reloads") {
  auto registry_ptr = fixture_registry();
  Registry& registry = *registry_ptr;
  OutputCatalog catalog;
  std::map<std::string, json> samples = {{"sum", json{{"numbers", {1, 2}}}}};
  catalog_outputs(registry, catalog, "Math MCP", samples);

  auto dir = std::filesystem::temp_directory_path() / "toolscope_catalog_test";
  std::filesystem::remove_all(dir);
  catalog.save(dir);
  CHECK(std::filesystem::exists(dir / "math_mcp.json"));

  OutputCatalog reloaded;
  reloaded.load(dir);
  REQUIRE(reloaded.lookup("Math MCP", "sum").has_value());
  CHECK(reloaded.lookup("Math MCP", "sum")->example == "3");
  std::filesystem::remove_all(dir);
}

TEST_CASE("tools_info renders signatures with outputs") {
  auto registry_ptr = fixture_registry();
  Registry& registry = *registry_ptr;
  SignatureIndex index(registry);
  OutputCatalog catalog;
  std::map<std::string, json> time_samples = {
      {"get_current_time", json{{"timezone", "UTC"}}},
      {"convert_time", json{{"time", "1970-01-01T00:00:00"},
                            {"source_timezone", "UTC"},
                            {"target_timezone", "UTC"}}}};
  catalog_outputs(registry, catalog, "Time MCP", time_samples);

  std::string info = tools_info(index, catalog, "Time MCP", {"get_current_time", "convert_time"});
  CHECK(info.find("get_current_time(timezone: str (required))") != std::string::npos);
  CHECK(info.find("convert_time(") != std::string::npos);
  CHECK(info.find("Output: str") != std::string::npos);
  CHECK(info.find("Example: '1970-01-01T00:00:00+00:00'") != std::string::npos);

  // Empty selection renders just the header.
  CHECK(tools_info(index, catalog, "Time MCP", {}) == "Tools info for server='Time MCP'");

  // Unknown tool error text lists the available tools (feeds the hint engine).
  try {
    tools_info(index, catalog, "Time MCP", {"get_time"});
    FAIL("expected unknown-tool");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("get_current_time, convert_time") != std::string::npos);
  }
}

TEST_CASE("token staircase: names <= tools_info <= raw schema, per math tool") {
  auto registry_ptr = fixture_registry();
  Registry& registry = *registry_ptr;
  SignatureIndex index(registry);
  OutputCatalog catalog;
  std::map<std::string, json> samples = {
      {"add", json{{"firstNumber", 1}, {"secondNumber", 2}}},
      {"subtract", json{{"firstNumber", 1}, {"secondNumber", 2}}},
      {"multiply", json{{"firstNumber", 1}, {"secondNumber", 2}}},
      {"division", json{{"firstNumber", 1}, {"secondNumber", 2}}},
      {"sum", json{{"numbers", {1, 2}}}},
      {"mean", json{{"numbers", {1, 2}}}},
      {"median", json{{"numbers", {1, 2}}}},
      {"mode", json{{"numbers", {1, 1}}}},
      {"min", json{{"numbers", {1, 2}}}},
      {"max", json{{"numbers", {1, 2}}}},
      {"floor", json{{"number", 1.5}}},
      {"ceiling", json{{"number", 1.5}}},
      {"round", json{{"number", 1.5}}}};
  catalog_outputs(registry, catalog, "Math MCP", samples);

  TokenCounter counter;
  for (const ToolSchema& t : registry.list_tools("Math MCP")) {
    const std::size_t names_tokens = counter(t.tool);
    const std::size_t info_tokens = counter(tools_info(index, catalog, "Math MCP", {t.tool}));
    const std::size_t raw_tokens =
        counter(render_full_schemas(registry, "Math MCP", std::vector<std::string>{t.tool}));
    CHECK(names_tokens <= info_tokens);
    CHECK(info_tokens <= raw_tokens);
  }
}
