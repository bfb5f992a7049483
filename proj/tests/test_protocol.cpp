#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <thread>

#include "toolscope/mockmcp.hpp"
#include "toolscope/protocol.hpp"

using namespace toolscope;

TEST_CASE("register and list a mock server") {
  Registry registry;
  registry.register_handler("Math MCP", make_math_server(), "mock:math");
  REQUIRE(registry.server_names() == std::vector<std::string>{"Math MCP"});

  auto tools = registry.list_tools("Math MCP");
  REQUIRE(tools.size() == 13);
  CHECK(tools[0].tool == "add");
  CHECK(tools[0].description == "Adds two numbers together");
  CHECK(tools[12].tool == "round");

  std::vector<std::string> names;
  for (const auto& t : tools) names.push_back(t.tool);
  CHECK(names == std::vector<std::string>{"add", "subtract", "multiply", "division", "sum", "mean",
                                          "median", "mode", "min", "max", "floor", "ceiling",
                                          "round"});
}

TEST_CASE("duplicate server names are rejected") {
  Registry registry;
  registry.register_handler("Math MCP", make_math_server(), "mock:math");
  try {
    registry.register_handler("Math MCP", make_math_server(), "mock:math");
    FAIL("expected duplicate-name error");
  } catch (const Error& e) {
    CHECK(e.kind() == "duplicate-name");
  }
}

TEST_CASE("unknown server raises") {
  Registry registry;
  CHECK_THROWS_AS(registry.list_tools("Foo"), Error);
  try {
    registry.list_tools("Foo");
  } catch (const Error& e) {
    CHECK(e.kind() == "unknown-server");
  }
}

TEST_CASE("list_tools is cached per connection") {
  Registry registry;
  auto math = make_math_server();
  registry.register_handler("Math MCP", math, "mock:math");
  auto first = registry.list_tools("Math MCP");
  const int after_first = math->request_count();
  auto second = registry.list_tools("Math MCP");
  CHECK(math->request_count() == after_first);  // no extra round-trip
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i].tool == second[i].tool);
}

TEST_CASE("call_tool returns transcript-exact text") {
  Registry registry;
  registry.register_handler("Math MCP", make_math_server(), "mock:math");

  ToolResult sum = registry.call_tool(
      "Math MCP", "sum", json{{"numbers", {120, 150, 150, 200, 180, 170, 160, 140, 130, 155}}});
  CHECK_FALSE(sum.is_error);
  CHECK(sum.raw_text == "1555");

  ToolResult mean = registry.call_tool("Math MCP", "mean", json{{"numbers", {150, 155}}});
  CHECK(mean.raw_text == "152.5");

  ToolResult mode = registry.call_tool(
      "Math MCP", "mode", json{{"numbers", {120, 150, 150, 200, 180, 170, 160, 140, 130, 155}}});
  CHECK(mode.raw_text == "Entries (150) appeared 2 times");
}

TEST_CASE("tool-level failures do not throw") {
  Registry registry;
  registry.register_handler("Math MCP", make_math_server(), "mock:math");
  ToolResult r = registry.call_tool("Math MCP", "division",
                                    json{{"firstNumber", 1}, {"secondNumber", 0}});
  CHECK(r.is_error);
  CHECK(r.raw_text == "division by zero");
}

TEST_CASE("unknown tool is a runtime-level error") {
  Registry registry;
  registry.register_handler("Math MCP", make_math_server(), "mock:math");
  CHECK_THROWS_AS(registry.call_tool("Math MCP", "nope", json::object()), Error);
}

TEST_CASE("identical calls to a pure tool return identical bytes") {
  Registry registry;
  registry.register_handler("Math MCP", make_math_server(), "mock:math");
  json args = {{"numbers", {3, 1, 2}}};
  ToolResult a = registry.call_tool("Math MCP", "median", args);
  ToolResult b = registry.call_tool("Math MCP", "median", args);
  CHECK(a.raw_text == b.raw_text);
  CHECK(registry.list_tools("Math MCP").size() == 13);  // registry state untouched
}

TEST_CASE("stdio transport failure surfaces after retries") {
  RegistryOptions options;
  options.transport_retries = 1;
  options.retry_backoff_ms = 10;
  Registry registry(options);
  ServerDescriptor d;
  d.name = "Ghost";
  d.transport = Transport::StdioSubprocess;
  d.address = "/nonexistent/binary-that-is-not-there";
  registry.register_server(d);  // registration is lazy, no error yet
  try {
    registry.list_tools("Ghost");
    FAIL("expected transport failure");
  } catch (const Error& e) {
    CHECK(e.kind() == "transport-failure");
    CHECK(std::string(e.what()).find("Ghost") != std::string::npos);
  }
}

TEST_CASE("registry serves concurrent callers without caller-side locking") {
  Registry registry;
  registry.register_handler("Math MCP", make_math_server(), "mock:math");
  TimeServerOptions t;
  t.clock = [] { return std::int64_t{0}; };
  registry.register_handler("Time MCP", make_time_server(t), "mock:time");

  std::atomic<int> failures{0};
  auto hammer = [&registry, &failures](int salt) {
    for (int i = 0; i < 100; ++i) {
      ToolResult sum = registry.call_tool(
          "Math MCP", "sum", json{{"numbers", {salt, i}}});
      if (sum.raw_text != format_number_text(salt + i)) failures.fetch_add(1);
      ToolResult now = registry.call_tool("Time MCP", "get_current_time", {{"timezone", "UTC"}});
      if (now.raw_text != "1970-01-01T00:00:00+00:00") failures.fetch_add(1);
    }
  };
  std::vector<std::thread> threads;
  for (int salt = 1; salt <= 4; ++salt) threads.emplace_back(hammer, salt);
  for (std::thread& th : threads) th.join();
  CHECK(failures.load() == 0);
}

TEST_CASE("http transport round-trips against a served mock") {
  auto math = make_math_server();
  httplib::Server server;
  server.Post(".*", [&math](const httplib::Request& req, httplib::Response& res) {
    json request = json::parse(req.body, nullptr, false);
    json resp = math->handle(request);
    res.set_content(resp.is_null() ? "{}" : resp.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serving([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  Registry registry;
  ServerDescriptor d;
  d.name = "Math MCP";
  d.transport = Transport::HttpEndpoint;
  d.address = "http://127.0.0.1:" + std::to_string(port) + "/mcp";
  registry.register_server(d);
  CHECK(registry.list_tools("Math MCP").size() == 13);
  CHECK(registry.call_tool("Math MCP", "add", json{{"firstNumber", 2}, {"secondNumber", 3}})
            .raw_text == "5");

  server.stop();
  serving.join();
}
