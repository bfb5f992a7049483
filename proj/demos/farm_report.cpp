// Runs the farm-yield orchestration program against the in-process mock
// servers and prints the computed report, then shows the error hints the
// engine produces for a misspelled tool.

#include <iostream>

#include "toolscope/mockmcp.hpp"
#include "toolscope/script/interpreter.hpp"

using namespace toolscope;

namespace {

const char* kProgram = R"PY(from MCPBench import MCPServer

math_mcp = MCPServer('Math MCP')
yields = [120, 150, 150, 200, 180, 170, 160, 140, 130, 155]

total_output = math_mcp.sum(numbers=yields)
average_yield = math_mcp.mean(numbers=yields)
median_yield = math_mcp.median(numbers=yields)
mode_text = math_mcp.mode(numbers=yields)
mode_yield = int(mode_text.split('(')[1].split(')')[0])
min_yield = math_mcp.min(numbers=yields)
max_yield = math_mcp.max(numbers=yields)

revenue = total_output * 30
fixed_costs = 10 * 2000
net_profit = revenue - fixed_costs
profit_margin = math_mcp.round(number=(net_profit / revenue) * 100)

{
    'Total Output': total_output,
    'Average Yield': average_yield,
    'Median Yield': median_yield,
    'Mode': mode_yield,
    'Lowest': min_yield,
    'Highest': max_yield,
    'Spread': max_yield - min_yield,
    'Revenue': revenue,
    'Net Profit': net_profit,
    'Profit Margin (%)': profit_margin
})PY";

}  // namespace

int main() {
  Registry registry;
  registry.register_handler("Math MCP", make_math_server(), "mock:math");
  TimeServerOptions time_options;
  time_options.clock = [] { return std::int64_t{0}; };
  registry.register_handler("Time MCP", make_time_server(time_options), "mock:time");

  SignatureIndex signatures(registry);
  OutputCatalog catalog;
  ScriptRuntime runtime;
  runtime.registry = &registry;
  runtime.signatures = &signatures;
  runtime.catalog = &catalog;
  Session session(runtime);

  EvalOutcome report = session.eval_cell(kProgram);
  std::cout << "--- tool log ---\n" << report.log;
  if (report.error) {
    std::cout << report.error->to_text() << "\n";
    return 1;
  }
  std::cout << "--- farm report ---\n" << report.display.value_or("(no output)") << "\n\n";

  EvalOutcome typo = session.eval_cell("math_mcp.sumnumbers(numbers=yields)");
  std::cout << "--- a misspelled tool gets a hint ---\n";
  if (typo.error) std::cout << typo.error->to_text() << "\n";

  EvalOutcome info = session.eval_cell("math_mcp.get_tools_info(['sum', 'mean'])");
  std::cout << "\n--- get_tools_info(['sum', 'mean']) ---\n"
            << info.display.value_or("(no output)") << "\n";
  return 0;
}
