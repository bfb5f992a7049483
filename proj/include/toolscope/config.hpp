#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "toolscope/agent.hpp"
#include "toolscope/context.hpp"
#include "toolscope/llm.hpp"
#include "toolscope/mockmcp.hpp"
#include "toolscope/rewards.hpp"

namespace toolscope {

struct LlmEndpointConfig {
  std::string type = "none";  // replay | http | none
  std::string path;           // replay script; may contain a {policy} placeholder
  std::string url;
  std::string model;
  std::string api_key_env = "LLM_API_KEY";
  double temperature = 1.0;
};

struct RunConfig {
  std::vector<ServerDescriptor> servers;
  ExposurePolicy policy = ExposurePolicy::Isl;
  Limits limits;
  LlmEndpointConfig agent_llm;
  LlmEndpointConfig judge_llm;
  LlmEndpointConfig generator_llm;
  CategoryWeights alpha;
  std::string trajectories_dir = "trajectories";
  std::string rubrics_dir = "rubrics";
  std::string catalog_dir = "catalog";
  std::string reports_dir = "reports";
  int rollouts = 1;
  int parallelism = 1;
  TruncationStrategy truncation_strategy = TruncationStrategy::Head;
  TruncationUnit truncation_unit = TruncationUnit::Tokens;
};

namespace configdetail {

/// ${VAR} interpolation for secrets; unset variables interpolate empty.
inline std::string interpolate_env(const std::string& text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
      const std::size_t end = text.find('}', i + 2);
      if (end != std::string::npos) {
        const std::string var = text.substr(i + 2, end - i - 2);
        if (const char* value = std::getenv(var.c_str())) out += value;
        i = end + 1;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

inline void interpolate_tree(json& node) {
  if (node.is_string()) {
    node = interpolate_env(node.get<std::string>());
    return;
  }
  if (node.is_object() || node.is_array()) {
    for (auto& child : node) interpolate_tree(child);
  }
}

[[noreturn]] inline void config_error(const std::string& path, const std::string& message) {
  throw Error("config-parse", "config field '" + path + "': " + message);
}

inline LlmEndpointConfig parse_llm(const json& node, const std::string& path) {
  LlmEndpointConfig out;
  if (!node.is_object()) config_error(path, "must be an object");
  out.type = node.value("type", "none");
  if (out.type != "replay" && out.type != "http" && out.type != "none")
    config_error(path + ".type", "must be replay, http or none");
  out.path = node.value("path", "");
  out.url = node.value("url", "");
  out.model = node.value("model", "");
  out.api_key_env = node.value("api_key_env", "LLM_API_KEY");
  out.temperature = node.value("temperature", 1.0);
  if (out.type == "replay" && out.path.empty()) config_error(path + ".path", "replay needs a path");
  if (out.type == "http" && out.url.empty()) config_error(path + ".url", "http needs a url");
  return out;
}

inline json llm_to_json(const LlmEndpointConfig& c) {
  return json{{"type", c.type},          {"path", c.path},
              {"url", c.url},            {"model", c.model},
              {"api_key_env", c.api_key_env}, {"temperature", c.temperature}};
}

}  // namespace configdetail

inline RunConfig parse_config(json doc) {
  using configdetail::config_error;
  configdetail::interpolate_tree(doc);
  RunConfig config;

  if (doc.contains("servers")) {
    if (!doc["servers"].is_array()) config_error("servers", "must be an array");
    int index = 0;
    for (const json& s : doc["servers"]) {
      std::string where = "servers[" + std::to_string(index++) + "]";
      if (!s.is_object()) config_error(where, "must be an object");
      ServerDescriptor d;
      d.name = s.value("name", "");
      if (d.name.empty()) config_error(where + ".name", "must be non-empty");
      const std::string transport = s.value("transport", "");
      if (transport == "mock") {
        d.transport = Transport::InProcess;
        d.address = s.value("kind", "");
        if (d.address.empty()) config_error(where + ".kind", "mock servers need a kind");
        if (s.contains("options"))
          for (const auto& [k, v] : s["options"].items())
            d.env[k] = v.is_string() ? v.get<std::string>() : v.dump();
      } else if (transport == "stdio") {
        d.transport = Transport::StdioSubprocess;
        d.address = s.value("command", "");
        if (d.address.empty()) config_error(where + ".command", "stdio servers need a command");
        if (s.contains("env"))
          for (const auto& [k, v] : s["env"].items()) d.env[k] = v.get<std::string>();
      } else if (transport == "http") {
        d.transport = Transport::HttpEndpoint;
        d.address = s.value("url", "");
        if (d.address.empty()) config_error(where + ".url", "http servers need a url");
      } else {
        config_error(where + ".transport", "must be mock, stdio or http");
      }
      d.protocol_version = s.value("protocol_version", "2025-06-18");
      config.servers.push_back(std::move(d));
    }
  }

  if (doc.contains("policy")) {
    auto policy = parse_policy(doc["policy"].get<std::string>());
    if (!policy) config_error("policy", "must be ALL_TOOLS, ISL, ITL or ITL_PTC");
    config.policy = *policy;
  }

  if (doc.contains("limits")) {
    const json& l = doc["limits"];
    config.limits.max_tool_calls = l.value("max_tool_calls", 20);
    config.limits.max_response_tokens = l.value("max_response_tokens", std::size_t{4000});
    config.limits.context_budget = l.value("context_budget", std::size_t{31000});
    config.limits.step_budget = l.value("step_budget", std::size_t{100000});
  }

  if (doc.contains("llm")) {
    const json& l = doc["llm"];
    if (l.contains("agent")) config.agent_llm = configdetail::parse_llm(l["agent"], "llm.agent");
    if (l.contains("judge")) config.judge_llm = configdetail::parse_llm(l["judge"], "llm.judge");
    if (l.contains("generator"))
      config.generator_llm = configdetail::parse_llm(l["generator"], "llm.generator");
  }

  if (doc.contains("alpha")) {
    const json& a = doc["alpha"];
    config.alpha.tf = a.value("tf", 0.4);
    config.alpha.ta = a.value("ta", 0.2);
    config.alpha.tg = a.value("tg", 0.2);
    config.alpha.pa = a.value("pa", 0.2);
    try {
      config.alpha.validate();
    } catch (const Error& e) {
      config_error("alpha", e.what());
    }
  }

  if (doc.contains("dirs")) {
    const json& d = doc["dirs"];
    config.trajectories_dir = d.value("trajectories", config.trajectories_dir);
    config.rubrics_dir = d.value("rubrics", config.rubrics_dir);
    config.catalog_dir = d.value("catalog", config.catalog_dir);
    config.reports_dir = d.value("reports", config.reports_dir);
  }

  config.rollouts = doc.value("rollouts", 1);
  config.parallelism = doc.value("parallelism", 1);
  if (config.rollouts < 1) config_error("rollouts", "must be >= 1");
  if (config.parallelism < 1) config_error("parallelism", "must be >= 1");

  if (doc.contains("truncation")) {
    const json& t = doc["truncation"];
    const std::string strategy = t.value("strategy", "head");
    if (strategy == "head") config.truncation_strategy = TruncationStrategy::Head;
    else if (strategy == "head-tail") config.truncation_strategy = TruncationStrategy::HeadTail;
    else config_error("truncation.strategy", "must be head or head-tail");
    const std::string unit = t.value("unit", "tokens");
    if (unit == "tokens") config.truncation_unit = TruncationUnit::Tokens;
    else if (unit == "chars") config.truncation_unit = TruncationUnit::Chars;
    else config_error("truncation.unit", "must be tokens or chars");
  }

  return config;
}

inline json config_to_json(const RunConfig& config) {
  json servers = json::array();
  for (const ServerDescriptor& d : config.servers) {
    json s = {{"name", d.name}};
    switch (d.transport) {
      case Transport::InProcess: {
        s["transport"] = "mock";
        s["kind"] = d.address;
        if (!d.env.empty()) {
          json options = json::object();
          for (const auto& [k, v] : d.env) options[k] = v;
          s["options"] = std::move(options);
        }
        break;
      }
      case Transport::StdioSubprocess: {
        s["transport"] = "stdio";
        s["command"] = d.address;
        if (!d.env.empty()) {
          json env = json::object();
          for (const auto& [k, v] : d.env) env[k] = v;
          s["env"] = std::move(env);
        }
        break;
      }
      case Transport::HttpEndpoint:
        s["transport"] = "http";
        s["url"] = d.address;
        break;
    }
    s["protocol_version"] = d.protocol_version;
    servers.push_back(std::move(s));
  }
  return json{
      {"servers", std::move(servers)},
      {"policy", policy_name(config.policy)},
      {"limits",
       {{"max_tool_calls", config.limits.max_tool_calls},
        {"max_response_tokens", config.limits.max_response_tokens},
        {"context_budget", config.limits.context_budget},
        {"step_budget", config.limits.step_budget}}},
      {"llm",
       {{"agent", configdetail::llm_to_json(config.agent_llm)},
        {"judge", configdetail::llm_to_json(config.judge_llm)},
        {"generator", configdetail::llm_to_json(config.generator_llm)}}},
      {"alpha",
       {{"tf", config.alpha.tf}, {"ta", config.alpha.ta}, {"tg", config.alpha.tg},
        {"pa", config.alpha.pa}}},
      {"dirs",
       {{"trajectories", config.trajectories_dir},
        {"rubrics", config.rubrics_dir},
        {"catalog", config.catalog_dir},
        {"reports", config.reports_dir}}},
      {"rollouts", config.rollouts},
      {"parallelism", config.parallelism},
      {"truncation",
       {{"strategy", config.truncation_strategy == TruncationStrategy::Head ? "head" : "head-tail"},
        {"unit", config.truncation_unit == TruncationUnit::Tokens ? "tokens" : "chars"}}}};
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config-parse", "cannot open config file '" + path.string() + "'");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error("config-parse", "config file is not valid JSON");
  return parse_config(std::move(doc));
}

// ---------------------------------------------------------------------------
// Task files (JSONL, one record per line)

struct TaskRecord {
  std::string id;
  std::string task;
  std::string concrete_task;  // reference for the base judge, never shown to the agent
  std::string solution;       // optional seed for rubric generation
  std::vector<std::string> servers;  // allowlist; empty = all configured servers
};

inline std::vector<TaskRecord> load_tasks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("task-file", "cannot open task file '" + path.string() + "'");
  std::vector<TaskRecord> tasks;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded())
      throw Error("task-file", "line " + std::to_string(line_no) + " is not valid JSON");
    TaskRecord record;
    record.id = doc.value("id", "");
    record.task = doc.value("task", "");
    if (record.id.empty() || record.task.empty())
      throw Error("task-file", "line " + std::to_string(line_no) + " needs 'id' and 'task'");
    record.concrete_task = doc.value("concrete_task", "");
    record.solution = doc.value("solution", "");
    if (doc.contains("servers"))
      for (const json& s : doc["servers"]) record.servers.push_back(s.get<std::string>());
    tasks.push_back(std::move(record));
  }
  return tasks;
}

// ---------------------------------------------------------------------------
// Factories

/// Build a registry holding the configured servers, optionally restricted to
/// an allowlist. Mocks are fresh instances (they are stateless).
inline std::unique_ptr<Registry> build_registry(const RunConfig& config,
                                                const std::vector<std::string>& allowlist = {}) {
  auto registry = std::make_unique<Registry>();
  for (const ServerDescriptor& d : config.servers) {
    if (!allowlist.empty() &&
        std::find(allowlist.begin(), allowlist.end(), d.name) == allowlist.end())
      continue;
    if (d.transport == Transport::InProcess) {
      auto mock = make_mock_server(d.address, d.env);
      // The descriptor name wins over the mock's default display name.
      registry->register_handler(d.name, std::move(mock), "mock:" + d.address);
    } else {
      registry->register_server(d);
    }
  }
  return registry;
}

/// Instantiate an LLM endpoint. Replay endpoints restart from the top of the
/// script, so call this once per episode.
inline std::unique_ptr<LlmClient> make_llm(const LlmEndpointConfig& endpoint,
                                           ExposurePolicy policy) {
  if (endpoint.type == "replay") {
    std::string path = prompts::fill(endpoint.path, {{"policy", policy_name(policy)}});
    return std::make_unique<ReplayClient>(ReplayClient::from_file(path));
  }
  if (endpoint.type == "http") {
    HttpLlmOptions options;
    options.url = endpoint.url;
    options.model = endpoint.model;
    options.api_key_env = endpoint.api_key_env;
    options.temperature = endpoint.temperature;
    return std::make_unique<HttpChatClient>(options);
  }
  throw Error("llm-config", "no usable LLM endpoint configured (type is 'none')");
}

}  // namespace toolscope
