#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "toolscope/commands.hpp"
#include "toolscope/config.hpp"

using namespace toolscope;
namespace fs = std::filesystem;

namespace {

std::string fixture_path(const std::string& name) {
  return std::string(TOOLSCOPE_FIXTURES_DIR) + "/" + name;
}

/// Scratch directory wiped on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("toolscope_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const {
    return sub.empty() ? path.string() : (path / sub).string();
  }
};

json farm_config_json(const TempDir& dir, const std::string& policy,
                      const std::string& replay_fixture, bool undefined_median) {
  json math_options = json::object();
  if (undefined_median) math_options["quirk"] = "undefined-median";
  return json{
      {"servers",
       {{{"name", "Time MCP"}, {"transport", "mock"}, {"kind", "time"}, {"options", {{"epoch", "0"}}}},
        {{"name", "Math MCP"}, {"transport", "mock"}, {"kind", "math"}, {"options", math_options}}}},
      {"policy", policy},
      {"llm", {{"agent", {{"type", "replay"}, {"path", fixture_path(replay_fixture)}}}}},
      {"dirs",
       {{"trajectories", dir.str("trajectories")},
        {"rubrics", dir.str("rubrics")},
        {"catalog", dir.str("catalog")},
        {"reports", dir.str("reports")}}}};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("config round-trips through serialization") {
  json doc = farm_config_json(TempDir("cfg_rt"), "ISL", "isl_farm_replay.txt", true);
  doc["rollouts"] = 4;
  doc["parallelism"] = 2;
  doc["limits"] = {{"max_tool_calls", 7}, {"context_budget", 9999}};
  doc["truncation"] = {{"strategy", "head-tail"}, {"unit", "chars"}};
  RunConfig config = parse_config(doc);
  CHECK(config.limits.max_tool_calls == 7);
  CHECK(config.rollouts == 4);
  CHECK(config.truncation_strategy == TruncationStrategy::HeadTail);

  RunConfig again = parse_config(config_to_json(config));
  CHECK(config_to_json(again) == config_to_json(config));
}

TEST_CASE("config errors carry a field path") {
  try {
    parse_config(json{{"servers", {{{"transport", "mock"}, {"kind", "math"}}}}});
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.kind() == "config-parse");
    CHECK(std::string(e.what()).find("servers[0].name") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(json{{"policy", "WAT"}}), Error);
  CHECK_THROWS_AS(parse_config(json{{"alpha", {{"tf", 0.2}, {"ta", 0.4}, {"tg", 0.2}, {"pa", 0.2}}}}),
                  Error);
}

TEST_CASE("config interpolates environment variables") {
  setenv("TOOLSCOPE_TEST_SECRET", "sekrit", 1);
  json doc = {{"servers",
               {{{"name", "S"}, {"transport", "stdio"}, {"command", "run-server"},
                 {"env", {{"API_KEY", "${TOOLSCOPE_TEST_SECRET}"}}}}}}};
  RunConfig config = parse_config(doc);
  CHECK(config.servers[0].env.at("API_KEY") == "sekrit");
  unsetenv("TOOLSCOPE_TEST_SECRET");
}

TEST_CASE("task files parse and validate") {
  auto tasks = load_tasks(fixture_path("farm_tasks.jsonl"));
  REQUIRE(tasks.size() == 1);
  CHECK(tasks[0].id == "farm-yield");
  CHECK(tasks[0].task.rfind("Task: I", 0) == 0);
  CHECK(tasks[0].servers == std::vector<std::string>{"Time MCP", "Math MCP"});
  CHECK_FALSE(tasks[0].concrete_task.empty());

  TempDir dir("tasks_bad");
  {
    std::ofstream out(dir.path / "bad.jsonl");
    out << "{\"task\": \"no id\"}\n";
  }
  CHECK_THROWS_AS(load_tasks(dir.str("bad.jsonl")), Error);
}

TEST_CASE("cmd_run executes the farm replay end to end") {
  TempDir dir("run_farm");
  RunConfig config = parse_config(farm_config_json(dir, "ISL", "isl_farm_replay.txt", true));
  std::ostringstream out;
  const int status = cmd_run(config, fixture_path("farm_tasks.jsonl"), out);
  CHECK(status == 0);
  CHECK(out.str().find("termination=answered") != std::string::npos);
  CHECK(out.str().find("tool_calls=5") != std::string::npos);

  const fs::path traj_file = fs::path(dir.str("trajectories")) / "farm-yield_r0.jsonl";
  REQUIRE(fs::exists(traj_file));
  REQUIRE(fs::exists(traj_file.string() + ".mask.jsonl"));
  Trajectory traj = read_trajectory_jsonl(traj_file);
  CHECK(traj.termination == Termination::Answered);
  CHECK(traj.task == load_tasks(fixture_path("farm_tasks.jsonl"))[0].task);
}

TEST_CASE("cmd_run with n rollouts writes n records sharing the task id") {
  TempDir dir("run_rollouts");
  RunConfig config = parse_config(farm_config_json(dir, "ISL", "isl_farm_replay.txt", true));
  config.rollouts = 4;
  std::ostringstream out;
  CHECK(cmd_run(config, fixture_path("farm_tasks.jsonl"), out) == 0);
  int count = 0;
  for (const auto& entry : fs::directory_iterator(dir.str("trajectories"))) {
    const std::string name = entry.path().filename().string();
    if (name.find(".mask.") != std::string::npos) continue;
    Trajectory traj = read_trajectory_jsonl(entry.path());
    CHECK(traj.task_id == "farm-yield");
    ++count;
  }
  CHECK(count == 4);
}

TEST_CASE("cmd_run reports a missing server binary against the descriptor") {
  TempDir dir("run_missing");
  json doc = farm_config_json(dir, "ISL", "isl_farm_replay.txt", true);
  doc["servers"].push_back(
      {{"name", "Ghost MCP"}, {"transport", "stdio"}, {"command", "/does/not/exist"}});
  RunConfig config = parse_config(doc);
  // tasks that allowlist the ghost server fail at first use
  {
    std::ofstream tasks(dir.path / "tasks.jsonl");
    tasks << R"({"id": "ghost", "task": "Task: use the ghost.", "servers": ["Ghost MCP"]})" << "\n";
  }
  // an episode whose replay immediately touches the ghost server
  {
    std::ofstream replay(dir.path / "replay.txt");
    replay << "<tool_call>{\"name\": \"fetch_tools\", \"arguments\": {\"server\": \"Ghost MCP\"}}"
           << "</tool_call>\n";
  }
  config.agent_llm.path = dir.str("replay.txt");
  std::ostringstream out;
  const int status = cmd_run(config, dir.str("tasks.jsonl"), out);
  CHECK(status == 1);  // replay exhausts after the error -> error-stall
  CHECK(out.str().find("ghost") != std::string::npos);
}

TEST_CASE("cmd_compare emits ordered ledgers for the three policies") {
  TempDir dir("compare_fig1");
  json doc = {
      {"servers",
       {{{"name", "Alpha Tools"}, {"transport", "mock"}, {"kind", "demo"},
         {"options", {{"prefix", "alpha"}, {"tools", "10"}, {"name", "Alpha Tools"}}}},
        {{"name", "Beta Tools"}, {"transport", "mock"}, {"kind", "demo"},
         {"options", {{"prefix", "beta"}, {"tools", "10"}, {"name", "Beta Tools"}}}},
        {{"name", "Gamma Tools"}, {"transport", "mock"}, {"kind", "demo"},
         {"options", {{"prefix", "gamma"}, {"tools", "10"}, {"name", "Gamma Tools"}}}}}},
      {"llm",
       {{"agent",
         {{"type", "replay"}, {"path", std::string(TOOLSCOPE_FIXTURES_DIR) + "/fig1_{policy}.txt"}}}}},
      {"dirs", {{"trajectories", dir.str("trajectories")}, {"reports", dir.str("reports")}}}};
  RunConfig config = parse_config(doc);

  std::ostringstream out;
  const int status = cmd_compare(
      config, fixture_path("fig1_tasks.jsonl"),
      {ExposurePolicy::AllTools, ExposurePolicy::Isl, ExposurePolicy::Itl}, dir.str("report"), out);
  CHECK(status == 0);

  const std::string csv = slurp(fs::path(dir.str("report")) / "compare.csv");
  CHECK(csv.rfind("task_id,policy,final_ledger_tokens,tool_calls,model_turns,termination\n", 0) == 0);

  // pull the final ledgers out of the CSV
  std::map<std::string, long> ledger;
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::string task, policy, tokens;
    std::getline(fields, task, ',');
    std::getline(fields, policy, ',');
    std::getline(fields, tokens, ',');
    ledger[policy] = std::stol(tokens);
  }
  REQUIRE(ledger.size() == 3);
  CHECK(ledger["ALL_TOOLS"] > ledger["ISL"]);
  CHECK(ledger["ISL"] > ledger["ITL"]);

  // per-turn series is monotone non-decreasing within each policy
  const std::string series = slurp(fs::path(dir.str("report")) / "ledger_series.csv");
  std::istringstream series_lines(series);
  std::getline(series_lines, line);  // header
  std::map<std::string, long> last;
  while (std::getline(series_lines, line)) {
    std::istringstream fields(line);
    std::string task, policy, turn, tokens;
    std::getline(fields, task, ',');
    std::getline(fields, policy, ',');
    std::getline(fields, turn, ',');
    std::getline(fields, tokens, ',');
    const long value = std::stol(tokens);
    if (last.count(policy)) CHECK(value >= last[policy]);
    last[policy] = value;
  }
}

TEST_CASE("cmd_compare rejects fewer than two policies and empty task files") {
  TempDir dir("compare_usage");
  RunConfig config;
  std::ostringstream out;
  CHECK(cmd_compare(config, fixture_path("fig1_tasks.jsonl"), {ExposurePolicy::Isl},
                    dir.str("report"), out) == 2);

  {
    std::ofstream empty(dir.path / "empty.jsonl");
  }
  json doc = {{"llm", {{"agent", {{"type", "replay"}, {"path", fixture_path("fig1_ISL.txt")}}}}}};
  RunConfig config2 = parse_config(doc);
  std::ostringstream out2;
  CHECK(cmd_compare(config2, dir.str("empty.jsonl"),
                    {ExposurePolicy::Isl, ExposurePolicy::Itl}, dir.str("report2"), out2) == 0);
  const std::string csv = slurp(fs::path(dir.str("report2")) / "compare.csv");
  CHECK(csv == "task_id,policy,final_ledger_tokens,tool_calls,model_turns,termination\n");
}

TEST_CASE("cmd_rubric_gen writes once and skips on rerun") {
  TempDir dir("rubric_gen");
  json doc = farm_config_json(dir, "ISL", "isl_farm_replay.txt", true);
  doc["llm"]["generator"] = {{"type", "replay"}, {"path", fixture_path("generator_rubrics_replay.txt")}};
  RunConfig config = parse_config(doc);

  // three tasks, one file
  {
    std::ofstream tasks(dir.path / "tasks.jsonl");
    for (int i = 1; i <= 3; ++i)
      tasks << json{{"id", "task" + std::to_string(i)}, {"task", "Task: t" + std::to_string(i)},
                    {"servers", {"Math MCP"}}}
                   .dump()
            << "\n";
  }
  std::ostringstream out;
  CHECK(cmd_rubric_gen(config, dir.str("tasks.jsonl"), out) == 0);
  CHECK(out.str().find("written=3 skipped=0 failed=0") != std::string::npos);
  CHECK(fs::exists(fs::path(dir.str("rubrics")) / "task1.json"));

  std::ostringstream out2;
  CHECK(cmd_rubric_gen(config, dir.str("tasks.jsonl"), out2) == 0);
  CHECK(out2.str().find("written=0 skipped=3 failed=0") != std::string::npos);
}

TEST_CASE("cmd_rubric_gen reports generator failures per task") {
  TempDir dir("rubric_fail");
  json doc = farm_config_json(dir, "ISL", "isl_farm_replay.txt", true);
  // a generator that always emits 11 criteria: the validator must reject it
  {
    json list = json::array();
    for (int i = 0; i < 11; ++i)
      list.push_back({{"criteria_name", i < 5 ? "Task Fulfillment and Quality" : "Tool Appropriateness"},
                      {"criteria_description", "x"},
                      {"weight", 5}});
    std::ofstream replay(dir.path / "bad_gen.txt");
    replay << "<RUBRICS>" << list.dump() << "</RUBRICS>\n";
  }
  doc["llm"]["generator"] = {{"type", "replay"}, {"path", dir.str("bad_gen.txt")}};
  RunConfig config = parse_config(doc);
  {
    std::ofstream tasks(dir.path / "tasks.jsonl");
    tasks << R"({"id": "only", "task": "Task: t", "servers": ["Math MCP"]})" << "\n";
  }
  std::ostringstream out;
  CHECK(cmd_rubric_gen(config, dir.str("tasks.jsonl"), out) == 1);
  CHECK(out.str().find("failed=1") != std::string::npos);
  CHECK(out.str().find("only") != std::string::npos);
}

TEST_CASE("cmd_eval rubric mode: equal rollouts give equal R and zero advantages") {
  TempDir dir("eval_rubric");
  json doc = farm_config_json(dir, "ISL", "isl_farm_replay.txt", true);
  doc["rollouts"] = 4;
  doc["llm"]["judge"] = {{"type", "replay"}, {"path", fixture_path("judge_eval_replay.txt")}};
  doc["llm"]["generator"] = {{"type", "replay"}, {"path", fixture_path("generator_rubrics_replay.txt")}};
  RunConfig config = parse_config(doc);

  std::ostringstream run_out;
  REQUIRE(cmd_run(config, fixture_path("farm_tasks.jsonl"), run_out) == 0);
  std::ostringstream gen_out;
  REQUIRE(cmd_rubric_gen(config, fixture_path("farm_tasks.jsonl"), gen_out) == 0);

  std::ostringstream eval_out;
  CHECK(cmd_eval(config, config.trajectories_dir, "rubric", dir.str("report"), eval_out) == 0);
  const std::string csv = slurp(fs::path(dir.str("report")) / "rewards.csv");
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "task_id,trajectory_id,d1,d2,d3,d4,d5,d6,d7,d8,d9,d10,d11,d12,S_TF,S_TA,S_TG,S_PA,R,"
        "advantage");
  std::vector<std::string> rewards, advantages;
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> fields;
    std::istringstream fs_line(line);
    std::string field;
    while (std::getline(fs_line, field, ',')) fields.push_back(field);
    REQUIRE(fields.size() == 20);
    rewards.push_back(fields[18]);
    advantages.push_back(fields[19]);
  }
  REQUIRE(rewards.size() == 4);
  for (const std::string& r : rewards) CHECK(r == rewards[0]);
  for (const std::string& a : advantages) CHECK(a == "0");
}

TEST_CASE("cmd_eval rubric mode names missing rubrics") {
  TempDir dir("eval_missing");
  json doc = farm_config_json(dir, "ISL", "isl_farm_replay.txt", true);
  doc["llm"]["judge"] = {{"type", "replay"}, {"path", fixture_path("judge_eval_replay.txt")}};
  RunConfig config = parse_config(doc);
  std::ostringstream run_out;
  REQUIRE(cmd_run(config, fixture_path("farm_tasks.jsonl"), run_out) == 0);

  std::ostringstream eval_out;
  CHECK(cmd_eval(config, config.trajectories_dir, "rubric", dir.str("report"), eval_out) == 1);
  CHECK(eval_out.str().find("missing rubric for task farm-yield") != std::string::npos);
}

TEST_CASE("cmd_eval generic mode emits the six metric columns") {
  TempDir dir("eval_generic");
  json doc = farm_config_json(dir, "ISL", "isl_farm_replay.txt", true);
  doc["llm"]["judge"] = {{"type", "replay"}, {"path", fixture_path("judge_generic_replay.txt")}};
  RunConfig config = parse_config(doc);
  std::ostringstream run_out;
  REQUIRE(cmd_run(config, fixture_path("farm_tasks.jsonl"), run_out) == 0);

  std::ostringstream eval_out;
  CHECK(cmd_eval(config, config.trajectories_dir, "generic", dir.str("report"), eval_out) == 0);
  const std::string csv = slurp(fs::path(dir.str("report")) / "rewards.csv");
  CHECK(csv.find("task_fulfillment,grounding,tool_appropriateness,parameter_accuracy,"
                 "dependency_awareness,parallelism_and_efficiency") != std::string::npos);
  CHECK(csv.find("farm-yield,farm-yield_r0,4,5,6,9.5,5,4") != std::string::npos);

  std::ostringstream bad_mode;
  CHECK(cmd_eval(config, config.trajectories_dir, "wat", dir.str("report"), bad_mode) == 2);
}

TEST_CASE("parallel rollouts produce the same files as serial ones") {
  TempDir serial_dir("run_serial");
  RunConfig serial = parse_config(farm_config_json(serial_dir, "ISL", "isl_farm_replay.txt", true));
  serial.rollouts = 3;
  std::ostringstream out1;
  REQUIRE(cmd_run(serial, fixture_path("farm_tasks.jsonl"), out1) == 0);

  TempDir parallel_dir("run_parallel");
  RunConfig parallel =
      parse_config(farm_config_json(parallel_dir, "ISL", "isl_farm_replay.txt", true));
  parallel.rollouts = 3;
  parallel.parallelism = 3;
  std::ostringstream out2;
  REQUIRE(cmd_run(parallel, fixture_path("farm_tasks.jsonl"), out2) == 0);

  for (int r = 0; r < 3; ++r) {
    const std::string name = "farm-yield_r" + std::to_string(r) + ".jsonl";
    CHECK(slurp(fs::path(serial.trajectories_dir) / name) ==
          slurp(fs::path(parallel.trajectories_dir) / name));
  }
}

TEST_CASE("mock subcommand serves MCP over stdio to an external client") {
  const char* bin = std::getenv("TOOLSCOPE_BIN");
  if (!bin || !fs::exists(bin)) {
    SKIP("TOOLSCOPE_BIN not set; run through ctest");
  }
  Registry registry;
  ServerDescriptor d;
  d.name = "Math MCP";
  d.transport = Transport::StdioSubprocess;
  d.address = std::string(bin) + " mock math --quirk undefined-median";
  registry.register_server(d);
  auto tools = registry.list_tools("Math MCP");
  REQUIRE(tools.size() == 13);
  CHECK(tools[0].tool == "add");
  CHECK(registry
            .call_tool("Math MCP", "sum",
                       json{{"numbers", {120, 150, 150, 200, 180, 170, 160, 140, 130, 155}}})
            .raw_text == "1555");
  CHECK(registry.call_tool("Math MCP", "median", json{{"numbers", {1, 2, 3}}}).raw_text ==
        "undefined");
}

TEST_CASE("bigpayload mock serves the configured token size") {
  const char* bin = std::getenv("TOOLSCOPE_BIN");
  if (!bin || !fs::exists(bin)) {
    SKIP("TOOLSCOPE_BIN not set; run through ctest");
  }
  Registry registry;
  ServerDescriptor d;
  d.name = "BigPayload MCP";
  d.transport = Transport::StdioSubprocess;
  d.address = std::string(bin) + " mock bigpayload --size 8000";
  registry.register_server(d);
  TokenCounter counter;
  ToolResult blob = registry.call_tool("BigPayload MCP", "fetch_blob", json::object());
  CHECK(counter(blob.raw_text) == 8000);
  // and the ledger-side truncation clamps it
  CHECK(counter(truncate_response(blob.raw_text, 4000, counter)) <= 4000);
}
