#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <memory>
#include <random>

#include "support.hpp"
#include "toolscope/mockmcp.hpp"
#include "toolscope/script/interpreter.hpp"

using namespace toolscope;

namespace {

struct ScriptFixture {
  std::unique_ptr<Registry> registry;
  std::unique_ptr<SignatureIndex> signatures;
  std::unique_ptr<OutputCatalog> catalog;
  std::unique_ptr<Session> session;

  explicit ScriptFixture(std::size_t step_budget = 100000) {
    registry = std::make_unique<Registry>();
    registry->register_handler("Math MCP", make_math_server(), "mock:math");
    TimeServerOptions t;
    t.clock = [] { return std::int64_t{0}; };
    registry->register_handler("Time MCP", make_time_server(t), "mock:time");
    signatures = std::make_unique<SignatureIndex>(*registry);
    catalog = std::make_unique<OutputCatalog>();
    ScriptRuntime runtime;
    runtime.registry = registry.get();
    runtime.signatures = signatures.get();
    runtime.catalog = catalog.get();
    session = std::make_unique<Session>(runtime, step_budget);
  }

  EvalOutcome run(const std::string& source) { return session->eval_cell(source); }
};

const char* kFarmProgram = R"PY(from MCPBench import MCPServer

# Initialize the Math MCP server
math_mcp = MCPServer('Math MCP')

# Given yield data
yields = [120, 150, 150, 200, 180, 170, 160, 140, 130, 155]

# Compute required metrics
total_output = math_mcp.sum(numbers=yields)
average_yield = math_mcp.mean(numbers=yields)
median_yield = math_mcp.median(numbers=yields)
mode_text = math_mcp.mode(numbers=yields)
mode_yield = int(mode_text.split('(')[1].split(')')[0])
min_yield = math_mcp.min(numbers=yields)
max_yield = math_mcp.max(numbers=yields)
spread = max_yield - min_yield

# Revenue at $30 per ton
revenue_per_ton = 30
revenue = total_output * revenue_per_ton

# Fixed costs: $2000 per farm x 10 farms
fixed_costs = 10 * 2000

# Net profit
net_profit = revenue - fixed_costs

# Profit margin (as percentage)
profit_margin = math_mcp.round(number=(net_profit / revenue) * 100)

# Gap between top farm (200 tons) and average yield
gap = 200 - average_yield

# Fertilizer budget
if gap > 30:
    fertilizer_cost = math_mcp.ceiling(number=gap * 10)
else:
    fertilizer_cost = math_mcp.floor(number=500)

# Compile all results
results = {
    'Total Output': total_output,
    'Average Yield': average_yield,
    'Median Yield': median_yield,
    'Most Common Yield (Mode)': mode_yield,
    'Lowest Yield': min_yield,
    'Highest Yield': max_yield,
    'Spread': spread,
    'Revenue': revenue,
    'Fixed Costs': fixed_costs,
    'Net Profit': net_profit,
    'Profit Margin (%)': profit_margin,
    'Gap (Top - Average)': gap,
    'Fertilizer Budget': fertilizer_cost
}

results)PY";

}  // namespace

TEST_CASE("parse: minimal statements") {
  CHECK_NOTHROW(script::parse("x = 1 + 2"));
  CHECK_NOTHROW(script::parse("x = 1; y = 2; x + y"));
  CHECK_NOTHROW(script::parse(""));
  CHECK_THROWS_AS(script::parse("for x in"), script::SyntaxError);
  CHECK_THROWS_AS(script::parse("x = "), script::SyntaxError);
  CHECK_THROWS_AS(script::parse("def f(): pass"), script::SyntaxError);
  CHECK_THROWS_AS(script::parse("{1, 2}"), script::SyntaxError);
}

TEST_CASE("parse: the full farm-yield program parses cleanly") {
  CHECK_NOTHROW(script::parse(kFarmProgram));
}

TEST_CASE("parse: syntax errors carry positions") {
  try {
    script::parse("x = 1\ny = (");
    FAIL("expected syntax error");
  } catch (const script::SyntaxError& e) {
    CHECK(e.line == 2);
    CHECK(e.message.find("expected") != std::string::npos);
  }
}

TEST_CASE("eval: arithmetic and display") {
  ScriptFixture fx;
  EvalOutcome out = fx.run("x = 1 + 2\nx");
  REQUIRE(out.display.has_value());
  CHECK(*out.display == "3");
  CHECK_FALSE(out.error.has_value());

  CHECK(*fx.run("7 / 2").display == "3.5");
  CHECK(*fx.run("7 // 2").display == "3");
  CHECK(*fx.run("-7 // 2").display == "-4");
  CHECK(*fx.run("-7 % 3").display == "2");
  CHECK(*fx.run("2 ** 10").display == "1024");
  CHECK(*fx.run("'ab' + 'cd'").display == "abcd");
  CHECK(*fx.run("[1] + [2, 3]").display == "[1, 2, 3]");
  CHECK(*fx.run("'ab' * 3").display == "ababab");
}

TEST_CASE("eval: assignments display nothing") {
  ScriptFixture fx;
  EvalOutcome out = fx.run("x = 5");
  CHECK_FALSE(out.display.has_value());
}

TEST_CASE("eval: state persists across cells") {
  ScriptFixture fx;
  fx.run("x = 5");
  EvalOutcome out = fx.run("x * 2");
  REQUIRE(out.display.has_value());
  CHECK(*out.display == "10");
}

TEST_CASE("eval: mutations before an in-cell error persist") {
  ScriptFixture fx;
  EvalOutcome out = fx.run("a = 1\nb = 2\nc = undefined_name\nd = 4");
  REQUIRE(out.error.has_value());
  CHECK(out.error->kind == HintedError::Kind::Runtime);
  CHECK(fx.session->globals().count("a") == 1);
  CHECK(fx.session->globals().count("b") == 1);
  CHECK(fx.session->globals().count("d") == 0);
}

TEST_CASE("eval: control flow") {
  ScriptFixture fx;
  CHECK(*fx.run("x = 3\nif x > 2:\n    y = 'big'\nelif x > 0:\n    y = 'small'\nelse:\n    y = 'neg'\ny")
             .display == "big");
  CHECK(*fx.run("total = 0\nfor i in [1, 2, 3, 4]:\n    total = total + i\ntotal").display == "10");
  CHECK(*fx.run("n = 0\nwhile n < 5:\n    n = n + 1\nn").display == "5");
  CHECK(*fx.run("'yes' if 2 > 1 else 'no'").display == "yes");
}

TEST_CASE("eval: tuple unpacking in for loops") {
  ScriptFixture fx;
  EvalOutcome out = fx.run(
      "d = {'a': 1, 'b': 2}\n"
      "parts = []\n"
      "for key, value in d.items():\n"
      "    parts.append(key + str(value))\n"
      "parts");
  REQUIRE(out.display.has_value());
  CHECK(*out.display == "['a1', 'b2']");
}

TEST_CASE("eval: comprehensions") {
  ScriptFixture fx;
  CHECK(*fx.run("[x * x for x in [1, 2, 3]]").display == "[1, 4, 9]");
  CHECK(*fx.run("[x for x in range(10) if x % 3 == 0]").display == "[0, 3, 6, 9]");
  CHECK(*fx.run("{k: k * 2 for k in ['a', 'b']}").display == "{'a': 'aa', 'b': 'bb'}");
  // comprehension variables do not leak
  EvalOutcome out = fx.run("q = [z for z in [1]]\nz");
  REQUIRE(out.error.has_value());
}

TEST_CASE("eval: slicing and negative indexing") {
  ScriptFixture fx;
  fx.run("xs = [0, 1, 2, 3, 4]");
  CHECK(*fx.run("xs[-1]").display == "4");
  CHECK(*fx.run("xs[1:3]").display == "[1, 2]");
  CHECK(*fx.run("xs[::2]").display == "[0, 2, 4]");
  CHECK(*fx.run("xs[::-1]").display == "[4, 3, 2, 1, 0]");
  CHECK(*fx.run("'hello'[1:4]").display == "ell");
}

TEST_CASE("eval: builtins work and nothing else resolves") {
  ScriptFixture fx;
  CHECK(*fx.run("len([1, 2, 3])").display == "3");
  CHECK(*fx.run("sum([1, 2, 3])").display == "6");
  CHECK(*fx.run("min([3, 1, 2])").display == "1");
  CHECK(*fx.run("max(3, 1, 2)").display == "3");
  CHECK(*fx.run("abs(-4)").display == "4");
  CHECK(*fx.run("round(57.1275)").display == "57");
  CHECK(*fx.run("round(2.675, 2)").display == "2.67");
  CHECK(*fx.run("sorted([3, 1, 2])").display == "[1, 2, 3]");
  CHECK(*fx.run("list(range(3))").display == "[0, 1, 2]");
  CHECK(*fx.run("int('42')").display == "42");
  CHECK(*fx.run("float('1.5')").display == "1.5");
  CHECK(*fx.run("str(46650)").display == "46650");
  CHECK(*fx.run("bool([])").display == "False");
  CHECK(*fx.run("dict([('a', 1)])").display == "{'a': 1}");
  CHECK(*fx.run("enumerate(['x', 'y'])").display == "[(0, 'x'), (1, 'y')]");
  CHECK(*fx.run("zip([1, 2], ['a', 'b'])").display == "[(1, 'a'), (2, 'b')]");

  for (const char* forbidden : {"open('/etc/passwd')", "eval('1')", "exec('x = 1')",
                                "__import__('os')", "getattr(x, 'y')", "print('hi')", "input()",
                                "globals()", "compile('1')"}) {
    EvalOutcome out = fx.run(forbidden);
    REQUIRE(out.error.has_value());
    CHECK(out.error->message.find("is not defined") != std::string::npos);
  }
}

TEST_CASE("eval: sandbox property - random identifiers never resolve") {
  ScriptFixture fx;
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    std::string name;
    std::uniform_int_distribution<int> len(3, 10);
    std::uniform_int_distribution<int> ch(0, 25);
    const int n = len(rng);
    for (int j = 0; j < n; ++j) name += static_cast<char>('a' + ch(rng));
    static const std::vector<std::string> builtins = {
        "len", "sum", "min", "max", "abs", "round", "sorted", "range",
        "int", "float", "str", "bool", "list", "dict", "enumerate", "zip"};
    if (std::find(builtins.begin(), builtins.end(), name) != builtins.end()) continue;
    EvalOutcome out = fx.run(name);
    REQUIRE(out.error.has_value());
    CHECK(out.error->message == "name '" + name + "' is not defined");
  }
}

TEST_CASE("eval: while-true terminates with a budget error quickly") {
  ScriptFixture fx;
  const auto start = std::chrono::steady_clock::now();
  EvalOutcome out = fx.run("x = 0\nwhile True:\n    x = x + 1");
  const auto elapsed = std::chrono::steady_clock::now() - start;
  REQUIRE(out.error.has_value());
  CHECK(out.error->kind == HintedError::Kind::Budget);
  CHECK(std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() < 2000);
  // budget re-arms per cell
  CHECK(*fx.run("1 + 1").display == "2");
}

TEST_CASE("eval: huge range hits the budget instead of memory") {
  ScriptFixture fx;
  EvalOutcome out = fx.run("range(10 ** 12)");
  REQUIRE(out.error.has_value());
  CHECK(out.error->kind == HintedError::Kind::Budget);
}

TEST_CASE("imports: MCPServer binds, everything else warns") {
  ScriptFixture fx;
  EvalOutcome out = fx.run("import numpy");
  CHECK(out.log.find("Warning: import 'numpy' ignored") != std::string::npos);
  CHECK_FALSE(out.error.has_value());

  EvalOutcome out2 = fx.run("math_mcp = MCPServer('Math MCP')");
  REQUIRE(out2.error.has_value());  // not imported yet
  CHECK(out2.error->hint.find("from MCPBench import MCPServer") != std::string::npos);

  fx.run("from MCPBench import MCPServer");
  EvalOutcome out3 = fx.run("math_mcp = MCPServer('Math MCP')");
  CHECK_FALSE(out3.error.has_value());
}

TEST_CASE("server binding: unknown server lists registered names") {
  ScriptFixture fx;
  fx.run("from MCPBench import MCPServer");
  EvalOutcome out = fx.run("MCPServer('Nope')");
  REQUIRE(out.error.has_value());
  CHECK(out.error->kind == HintedError::Kind::UnknownTool);
  CHECK(out.error->message.find("Math MCP") != std::string::npos);
  CHECK(out.error->message.find("Time MCP") != std::string::npos);
}

TEST_CASE("tool calls: keyword-only invocation returns parsed values") {
  ScriptFixture fx;
  fx.run("from MCPBench import MCPServer\nmath_mcp = MCPServer('Math MCP')");
  EvalOutcome out = fx.run("math_mcp.mean(numbers=[150, 155])");
  REQUIRE(out.display.has_value());
  CHECK(*out.display == "152.5");
  CHECK(out.log.find("[tool] Math MCP:mean(numbers=[150, 155])") != std::string::npos);
  CHECK(out.log.find("152.5") != std::string::npos);

  EvalOutcome pos = fx.run("math_mcp.mean([150, 155])");
  REQUIRE(pos.error.has_value());
  CHECK(pos.error->kind == HintedError::Kind::ArgumentError);
  CHECK(pos.error->message.find("mean(numbers: list (required))") != std::string::npos);

  EvalOutcome missing = fx.run("math_mcp.sum()");
  REQUIRE(missing.error.has_value());
  CHECK(missing.error->kind == HintedError::Kind::ArgumentError);
  CHECK(missing.error->message.find("'numbers'") != std::string::npos);
}

TEST_CASE("tool calls: unknown tool carries the list and a suggestion") {
  ScriptFixture fx;
  fx.run("from MCPBench import MCPServer\nmath_mcp = MCPServer('Math MCP')");
  EvalOutcome out = fx.run("math_mcp.sumnumbers(numbers=[1])");
  REQUIRE(out.error.has_value());
  CHECK(out.error->kind == HintedError::Kind::UnknownTool);
  CHECK(out.error->message.find("doesn't have the tool 'sumnumbers'") != std::string::npos);
  CHECK(out.error->message.find("add, subtract, multiply") != std::string::npos);
  CHECK(out.error->hint == "did you mean 'sum'?");

  fx.run("time_mcp = MCPServer('Time MCP')");
  EvalOutcome typo = fx.run("time_mcp.get_curent_time(timezone='UTC')");
  REQUIRE(typo.error.has_value());
  CHECK(typo.error->hint == "did you mean 'get_current_time'?");
}

TEST_CASE("tool calls: server-side argument feedback passes through verbatim") {
  ScriptFixture fx;
  fx.run("from MCPBench import MCPServer\nmath_mcp = MCPServer('Math MCP')");
  EvalOutcome out = fx.run("math_mcp.sum(numbers=[])");
  REQUIRE(out.error.has_value());
  CHECK(out.error->message == "invalid argument 'numbers': expected a non-empty array of numbers");
}

TEST_CASE("tool calls: tool results parse into program values") {
  ScriptFixture fx;
  fx.run("from MCPBench import MCPServer\nmath_mcp = MCPServer('Math MCP')");
  CHECK(*fx.run("math_mcp.sum(numbers=[1, 2]) + 10").display == "13");
  // string fallback stays a string
  CHECK(*fx.run("m = math_mcp.mode(numbers=[1, 1])\nm").display == "Entries (1) appeared 2 times");
}

TEST_CASE("output-access errors carry skeleton hints for tool results") {
  ScriptFixture fx;
  std::map<std::string, json> samples = {{"mode", json{{"numbers", {1, 1}}}}};
  catalog_outputs(*fx.registry, *fx.catalog, "Math MCP", samples);

  fx.run("from MCPBench import MCPServer\nmath_mcp = MCPServer('Math MCP')");
  EvalOutcome out = fx.run("r = math_mcp.mode(numbers=[1, 1])\nr['key']");
  REQUIRE(out.error.has_value());
  CHECK(out.error->kind == HintedError::Kind::OutputAccess);
  CHECK(out.error->message.find("string indices must be integers") != std::string::npos);
  CHECK(out.error->hint.find("You have tried to access a str as a dict") != std::string::npos);
  CHECK(out.error->hint.find("Recorded output schema for 'Math MCP:mode': str") != std::string::npos);
}

TEST_CASE("output-access: index out of range on a tool result hints too") {
  ScriptFixture fx;
  fx.run("from MCPBench import MCPServer\nmath_mcp = MCPServer('Math MCP')");
  EvalOutcome out = fx.run("r = math_mcp.mode(numbers=[1, 1])\nr[999]");
  REQUIRE(out.error.has_value());
  CHECK(out.error->kind == HintedError::Kind::OutputAccess);
  CHECK(out.error->hint.find("get_tools_info") != std::string::npos);
}

TEST_CASE("plain type errors unrelated to tools carry no hint") {
  ScriptFixture fx;
  EvalOutcome out = fx.run("1 + 'a'");
  REQUIRE(out.error.has_value());
  CHECK(out.error->kind == HintedError::Kind::Runtime);
  CHECK(out.error->hint.empty());

  EvalOutcome idx = fx.run("s = 'plain'\ns['key']");
  REQUIRE(idx.error.has_value());
  CHECK(idx.error->kind == HintedError::Kind::Runtime);  // no tool origin
}

TEST_CASE("get_tools_info delegates to the schema renderer") {
  ScriptFixture fx;
  fx.run("from MCPBench import MCPServer\ntime_mcp = MCPServer('Time MCP')");
  EvalOutcome out = fx.run("time_mcp.get_tools_info(['get_current_time', 'convert_time'])");
  REQUIRE(out.display.has_value());
  CHECK(out.display->find("get_current_time(timezone: str (required))") != std::string::npos);
  CHECK(out.display->find("convert_time(") != std::string::npos);

  EvalOutcome bad = fx.run("time_mcp.get_tools_info(['get_curent_time'])");
  REQUIRE(bad.error.has_value());
  CHECK(bad.error->kind == HintedError::Kind::UnknownTool);
  CHECK(bad.error->message.find("get_current_time") != std::string::npos);
  CHECK(bad.error->hint == "did you mean 'get_current_time'?");
}

TEST_CASE("the farm-yield program computes the eleven quantities") {
  ScriptFixture fx;
  EvalOutcome out = fx.run(kFarmProgram);
  REQUIRE_FALSE(out.error.has_value());
  REQUIRE(out.display.has_value());

  Value results = fx.session->globals().at("results");
  REQUIRE(results.is_map());
  auto get = [&](const std::string& key) {
    for (const auto& [k, v] : results.as_map())
      if (k.is_str() && k.as_str() == key) return v;
    FAIL("missing key " + key);
    return Value::none();
  };
  CHECK(get("Total Output").strict_equals(Value::integer(1555)));
  CHECK(get("Average Yield").strict_equals(Value::real(155.5)));
  CHECK(get("Median Yield").strict_equals(Value::real(152.5)));
  CHECK(get("Most Common Yield (Mode)").strict_equals(Value::integer(150)));
  CHECK(get("Lowest Yield").strict_equals(Value::integer(120)));
  CHECK(get("Highest Yield").strict_equals(Value::integer(200)));
  CHECK(get("Spread").strict_equals(Value::integer(80)));
  CHECK(get("Revenue").strict_equals(Value::integer(46650)));
  CHECK(get("Fixed Costs").strict_equals(Value::integer(20000)));
  CHECK(get("Net Profit").strict_equals(Value::integer(26650)));
  CHECK(get("Profit Margin (%)").strict_equals(Value::integer(57)));

  // the displayed map shows display-form numbers
  CHECK(out.display->find("'Total Output': 1555") != std::string::npos);
  CHECK(out.display->find("'Average Yield': 155.5") != std::string::npos);
}

TEST_CASE("determinism: the same cells give identical outputs and state") {
  auto run_all = []() {
    ScriptFixture fx;
    std::string transcript;
    for (const char* cell : {"from MCPBench import MCPServer", "m = MCPServer('Math MCP')",
                             "a = m.sum(numbers=[5, 6])", "b = [x * a for x in range(4)]", "b"}) {
      EvalOutcome out = fx.run(cell);
      transcript += out.to_response_text() + "\n---\n";
    }
    return transcript;
  };
  CHECK(run_all() == run_all());
}

TEST_CASE("cell response text composes log, display and errors") {
  ScriptFixture fx;
  fx.run("from MCPBench import MCPServer\nmath_mcp = MCPServer('Math MCP')");
  EvalOutcome out = fx.run("t = math_mcp.sum(numbers=[1, 2])\nt + 1");
  std::string text = out.to_response_text();
  CHECK(text.find("[tool] Math MCP:sum(numbers=[1, 2])") != std::string::npos);
  CHECK(text.find("\n3\n") != std::string::npos);
  CHECK(text.rfind("4") == text.size() - 1);

  EvalOutcome empty = fx.run("q = 1");
  CHECK(empty.to_response_text() == "(cell executed, no output)");
}
