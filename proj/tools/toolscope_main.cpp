// toolscope CLI: run agent episodes against MCP servers, compare exposure
// policies, generate rubrics, score trajectories, and host mock servers.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toolscope/toolscope.hpp"

namespace {

toolscope::RunConfig load_or_default(const std::string& config_path) {
  if (config_path.empty()) return toolscope::RunConfig{};
  return toolscope::load_config(config_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toolscope - staged-context MCP agent runtime"};
  app.require_subcommand(1);

  std::string config_path;
  std::string tasks_path;
  std::string policy_flag;
  std::string out_dir;
  std::string mode = "rubric";
  std::string trajectories_dir;
  std::vector<std::string> policy_list;
  int rollouts_flag = 0;

  auto* run = app.add_subcommand("run", "Run agent episodes over a task file");
  run->add_option("--config", config_path, "Config file (JSON)")->required();
  run->add_option("--tasks", tasks_path, "Task file (JSONL)")->required();
  run->add_option("--policy", policy_flag, "Override exposure policy (ALL_TOOLS|ISL|ITL|ITL_PTC)");
  run->add_option("--rollouts", rollouts_flag, "Override rollouts per task");
  run->add_option("--out", out_dir, "Override trajectories directory");

  auto* compare = app.add_subcommand("compare", "Run tasks under several policies, emit CSV");
  compare->add_option("--config", config_path, "Config file (JSON)")->required();
  compare->add_option("--tasks", tasks_path, "Task file (JSONL)")->required();
  compare->add_option("--policies", policy_list, "Policies to compare")->required()->delimiter(',');
  compare->add_option("--out", out_dir, "Report directory")->required();

  auto* rubric_gen = app.add_subcommand("rubric-gen", "Generate rubrics, one per task (write-once)");
  rubric_gen->add_option("--config", config_path, "Config file (JSON)")->required();
  rubric_gen->add_option("--tasks", tasks_path, "Task file (JSONL)")->required();

  auto* eval = app.add_subcommand("eval", "Score stored trajectories into a rewards CSV");
  eval->add_option("--config", config_path, "Config file (JSON)")->required();
  eval->add_option("--trajectories", trajectories_dir, "Trajectories directory")->required();
  eval->add_option("--mode", mode, "rubric or generic");
  eval->add_option("--out", out_dir, "Report directory")->required();

  std::string mock_kind;
  bool mock_http = false;
  int mock_port = 8831;
  int mock_size = 4001;
  long long mock_epoch = -1;
  std::string mock_quirk;
  auto* mock = app.add_subcommand("mock", "Host a mock MCP server (math|time|bigpayload)");
  mock->add_option("kind", mock_kind, "Mock kind")->required();
  mock->add_flag("--http", mock_http, "Serve over HTTP instead of stdio");
  mock->add_option("--port", mock_port, "HTTP port");
  mock->add_option("--size", mock_size, "bigpayload: token size of the blob");
  mock->add_option("--epoch", mock_epoch, "time: pin the clock to this unix epoch");
  mock->add_option("--quirk", mock_quirk, "math: quirk flag (undefined-median)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mock->parsed()) {
      std::map<std::string, std::string> options;
      if (mock_epoch >= 0) options["epoch"] = std::to_string(mock_epoch);
      if (mock_kind == "bigpayload") options["size_tokens"] = std::to_string(mock_size);
      if (!mock_quirk.empty()) options["quirk"] = mock_quirk;
      return toolscope::cmd_mock(mock_kind, options, mock_http, mock_port);
    }

    toolscope::RunConfig config = load_or_default(config_path);
    if (!policy_flag.empty()) {
      auto policy = toolscope::parse_policy(policy_flag);
      if (!policy) {
        std::cerr << "error: unknown policy '" << policy_flag << "'\n";
        return 2;
      }
      config.policy = *policy;
    }
    if (rollouts_flag > 0) config.rollouts = rollouts_flag;

    if (run->parsed()) {
      if (!out_dir.empty()) config.trajectories_dir = out_dir;
      return toolscope::cmd_run(config, tasks_path);
    }
    if (compare->parsed()) {
      std::vector<toolscope::ExposurePolicy> policies;
      for (const std::string& name : policy_list) {
        auto policy = toolscope::parse_policy(name);
        if (!policy) {
          std::cerr << "error: unknown policy '" << name << "'\n";
          return 2;
        }
        policies.push_back(*policy);
      }
      return toolscope::cmd_compare(config, tasks_path, policies, out_dir);
    }
    if (rubric_gen->parsed()) {
      return toolscope::cmd_rubric_gen(config, tasks_path);
    }
    if (eval->parsed()) {
      return toolscope::cmd_eval(config, trajectories_dir, mode, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
