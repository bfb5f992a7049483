#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>

#include "toolscope/mockmcp.hpp"
#include "toolscope/tokens.hpp"

using namespace toolscope;

namespace {

std::unique_ptr<Registry> make_registry(MathServerOptions math_options = {}) {
  auto registry = std::make_unique<Registry>();
  registry->register_handler("Math MCP", make_math_server(math_options), "mock:math");
  TimeServerOptions time_options;
  time_options.clock = [] { return std::int64_t{0}; };
  registry->register_handler("Time MCP", make_time_server(time_options), "mock:time");
  return registry;
}

std::string call(Registry& registry, const std::string& server, const std::string& tool,
                 const json& args) {
  return registry.call_tool(server, tool, args).raw_text;
}

}  // namespace

TEST_CASE("math mock: worked example values") {
  auto registry_ptr = make_registry();
  Registry& registry = *registry_ptr;
  const json yields = {{"numbers", {120, 150, 150, 200, 180, 170, 160, 140, 130, 155}}};
  CHECK(call(registry, "Math MCP", "sum", yields) == "1555");
  CHECK(call(registry, "Math MCP", "mean", yields) == "155.5");
  CHECK(call(registry, "Math MCP", "median", yields) == "152.5");
  CHECK(call(registry, "Math MCP", "mode", yields) == "Entries (150) appeared 2 times");
  CHECK(call(registry, "Math MCP", "min", yields) == "120");
  CHECK(call(registry, "Math MCP", "max", yields) == "200");
}

TEST_CASE("math mock: binary and unary tools") {
  auto registry_ptr = make_registry();
  Registry& registry = *registry_ptr;
  CHECK(call(registry, "Math MCP", "add", {{"firstNumber", 1.5}, {"secondNumber", 2}}) == "3.5");
  CHECK(call(registry, "Math MCP", "subtract", {{"firstNumber", 10}, {"secondNumber", 4}}) == "6");
  CHECK(call(registry, "Math MCP", "multiply", {{"firstNumber", 6}, {"secondNumber", 7}}) == "42");
  CHECK(call(registry, "Math MCP", "division", {{"firstNumber", 1}, {"secondNumber", 4}}) == "0.25");
  CHECK(call(registry, "Math MCP", "floor", {{"number", 44.5}}) == "44");
  CHECK(call(registry, "Math MCP", "ceiling", {{"number", 44.5}}) == "45");
  CHECK(call(registry, "Math MCP", "round", {{"number", 57.1275}}) == "57");
}

TEST_CASE("math mock: argument validation names the argument") {
  auto registry_ptr = make_registry();
  Registry& registry = *registry_ptr;
  ToolResult r = registry.call_tool("Math MCP", "sum", json::object());
  CHECK(r.is_error);
  CHECK(r.raw_text.find("'numbers'") != std::string::npos);
  r = registry.call_tool("Math MCP", "round", json::object());
  CHECK(r.is_error);
  CHECK(r.raw_text.find("'number'") != std::string::npos);
}

TEST_CASE("math mock: mode edge cases") {
  auto registry_ptr = make_registry();
  Registry& registry = *registry_ptr;
  CHECK(call(registry, "Math MCP", "mode", {{"numbers", {1, 1}}}) == "Entries (1) appeared 2 times");
  // No repeats: the largest candidate is reported once.
  CHECK(call(registry, "Math MCP", "mode", {{"numbers", {3, 1, 2}}}) ==
        "Entries (3) appeared 1 times");
  // Tied repeats list every winner in ascending order.
  CHECK(call(registry, "Math MCP", "mode", {{"numbers", {2, 2, 1, 1}}}) ==
        "Entries (1, 2) appeared 2 times");
}

TEST_CASE("math mock: even-length median averages the middle pair") {
  auto registry_ptr = make_registry();
  Registry& registry = *registry_ptr;
  CHECK(call(registry, "Math MCP", "median", {{"numbers", {4, 1, 3, 2}}}) == "2.5");
  CHECK(call(registry, "Math MCP", "median", {{"numbers", {5, 1, 3}}}) == "3");
}

TEST_CASE("math mock: undefined-median quirk reproduces the recorded transcript") {
  MathServerOptions options;
  options.undefined_median = true;
  auto registry_ptr = make_registry(options);
  Registry& registry = *registry_ptr;
  CHECK(call(registry, "Math MCP", "median",
             {{"numbers", {120, 150, 150, 200, 180, 170, 160, 140, 130, 155}}}) == "undefined");
  // Other tools are unaffected.
  CHECK(call(registry, "Math MCP", "sum", {{"numbers", {1, 2}}}) == "3");
}

TEST_CASE("math mock agrees with an arithmetic oracle over random lists") {
  auto registry_ptr = make_registry();
  Registry& registry = *registry_ptr;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_int_distribution<int> value(-50, 50);
  for (int iter = 0; iter < 1000; ++iter) {
    std::vector<int> xs(static_cast<std::size_t>(len(rng)));
    for (int& x : xs) x = value(rng);
    json args = {{"numbers", xs}};

    double sum = 0;
    for (int x : xs) sum += x;
    CHECK(call(registry, "Math MCP", "sum", args) == format_number_text(sum));
    CHECK(call(registry, "Math MCP", "mean", args) ==
          format_number_text(sum / static_cast<double>(xs.size())));
    CHECK(call(registry, "Math MCP", "min", args) ==
          format_number_text(*std::min_element(xs.begin(), xs.end())));
    CHECK(call(registry, "Math MCP", "max", args) ==
          format_number_text(*std::max_element(xs.begin(), xs.end())));

    std::vector<int> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    CHECK(call(registry, "Math MCP", "median", args) == format_number_text(median));

    std::map<int, int> counts;
    for (int x : xs) counts[x]++;
    int best = 0;
    for (const auto& [v, c] : counts) best = std::max(best, c);
    std::string entries;
    if (best == 1) {
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
    CHECK(call(registry, "Math MCP", "mode", args) ==
          "Entries (" + entries + ") appeared " + std::to_string(best) + " times");
  }
}

TEST_CASE("time mock: pinned clock renders epoch zero") {
  auto registry_ptr = make_registry();
  Registry& registry = *registry_ptr;
  CHECK(call(registry, "Time MCP", "get_current_time", {{"timezone", "UTC"}}) ==
        "1970-01-01T00:00:00+00:00");
  CHECK(call(registry, "Time MCP", "get_current_time", {{"timezone", "America/New_York"}}) ==
        "1969-12-31T19:00:00-05:00");
}

TEST_CASE("time mock: same-zone conversion is the identity") {
  auto registry_ptr = make_registry();
  Registry& registry = *registry_ptr;
  const std::string t = "2026-03-01T12:34:56";
  CHECK(call(registry, "Time MCP", "convert_time",
             {{"time", t}, {"source_timezone", "UTC"}, {"target_timezone", "UTC"}}) == t);
}

TEST_CASE("time mock: cross-zone conversion shifts by fixed offsets") {
  auto registry_ptr = make_registry();
  Registry& registry = *registry_ptr;
  CHECK(call(registry, "Time MCP", "convert_time",
             {{"time", "2026-03-01T12:00:00"},
              {"source_timezone", "UTC"},
              {"target_timezone", "Asia/Kolkata"}}) == "2026-03-01T17:30:00+05:30");
  CHECK(call(registry, "Time MCP", "convert_time",
             {{"time", "2026-03-01T00:30:00"},
              {"source_timezone", "Asia/Tokyo"},
              {"target_timezone", "UTC"}}) == "2026-02-28T15:30:00+00:00");
}

TEST_CASE("time mock: unknown timezone names the argument") {
  auto registry_ptr = make_registry();
  Registry& registry = *registry_ptr;
  ToolResult r = registry.call_tool("Time MCP", "get_current_time", {{"timezone", "Not/AZone"}});
  CHECK(r.is_error);
  CHECK(r.raw_text.find("'timezone'") != std::string::npos);
  CHECK(r.raw_text.find("Not/AZone") != std::string::npos);
}

TEST_CASE("time mock is deterministic given the pinned clock") {
  auto registry_ptr = make_registry();
  Registry& registry = *registry_ptr;
  auto a = call(registry, "Time MCP", "get_current_time", {{"timezone", "Europe/Paris"}});
  auto b = call(registry, "Time MCP", "get_current_time", {{"timezone", "Europe/Paris"}});
  CHECK(a == b);
}

TEST_CASE("bigpayload mock: generated blob measures the requested token size") {
  TokenCounter counter;
  Registry registry;
  registry.register_handler("BigPayload MCP", make_bigpayload_server(4001), "mock:bigpayload");
  ToolResult r = registry.call_tool("BigPayload MCP", "fetch_blob", json::object());
  CHECK_FALSE(r.is_error);
  CHECK(counter(r.raw_text) == 4001);

  Registry one;
  one.register_handler("BigPayload MCP", make_bigpayload_server(1), "mock:bigpayload");
  CHECK(counter(one.call_tool("BigPayload MCP", "fetch_blob", json::object()).raw_text) == 1);
}

TEST_CASE("mock factory dispatches by kind") {
  auto math = make_mock_server("math");
  CHECK(math->name() == "Math MCP");
  auto timesrv = make_mock_server("time", {{"epoch", "0"}});
  CHECK(timesrv->name() == "Time MCP");
  auto blob = make_mock_server("bigpayload", {{"size_tokens", "7"}});
  CHECK(blob->name() == "BigPayload MCP");
  CHECK_THROWS_AS(make_mock_server("nope"), Error);
}
