#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "toolscope/context.hpp"
#include "toolscope/llm.hpp"
#include "toolscope/schema.hpp"
#include "toolscope/script/interpreter.hpp"
#include "toolscope/tokens.hpp"

namespace toolscope {

// ---------------------------------------------------------------------------
// Trajectory model

enum class TurnRole { System, User, Assistant, ToolResponse };
enum class SpanRole { Model, ToolOutput, Scaffold };

inline const char* turn_role_name(TurnRole r) {
  switch (r) {
    case TurnRole::System: return "system";
    case TurnRole::User: return "user";
    case TurnRole::Assistant: return "assistant";
    case TurnRole::ToolResponse: return "tool_response";
  }
  return "?";
}

inline const char* span_role_name(SpanRole r) {
  switch (r) {
    case SpanRole::Model: return "MODEL";
    case SpanRole::ToolOutput: return "TOOL_OUTPUT";
    case SpanRole::Scaffold: return "SCAFFOLD";
  }
  return "?";
}

struct TurnSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  SpanRole role = SpanRole::Scaffold;
};

struct Turn {
  TurnRole role = TurnRole::User;
  std::string text;
  std::vector<TurnSpan> spans;
  std::size_t tokens = 0;
};

enum class Termination { Answered, CallCap, ContextBudget, ErrorStall };

inline const char* termination_name(Termination t) {
  switch (t) {
    case Termination::Answered: return "answered";
    case Termination::CallCap: return "call-cap";
    case Termination::ContextBudget: return "context-budget";
    case Termination::ErrorStall: return "error-stall";
  }
  return "?";
}

/// Episode limits; defaults mirror the training-run configuration.
struct Limits {
  int max_tool_calls = 20;
  std::size_t max_response_tokens = 4000;
  std::size_t context_budget = 31000;
  std::size_t step_budget = 100000;
};

struct Trajectory {
  std::string task_id;
  std::string trajectory_id;
  std::string task;
  std::string concrete_task;
  ExposurePolicy policy = ExposurePolicy::Isl;
  Limits limits;
  std::vector<Turn> turns;
  int tool_call_count = 0;
  int model_turn_count = 0;
  std::optional<std::string> final_answer;  // set iff termination == Answered
  Termination termination = Termination::ErrorStall;
  std::vector<std::size_t> ledger_series;  // one entry per turn, cumulative
};

// ---------------------------------------------------------------------------
// Assistant-output parsing

struct ParsedAssistant {
  enum class Action { None, ToolCall, Answer };
  std::optional<std::string> think;
  Action action = Action::None;
  std::string tool_name;
  json arguments = json::object();
  std::string answer;
  std::optional<std::string> malformed;  // diagnostic; the loop re-prompts once
  int ignored_blocks = 0;                // action blocks after the first
};

namespace agentdetail {

inline std::optional<std::pair<std::size_t, std::size_t>> find_tag(const std::string& text,
                                                                   const std::string& tag,
                                                                   std::size_t from = 0) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";
  const std::size_t begin = text.find(open, from);
  if (begin == std::string::npos) return std::nullopt;
  const std::size_t body = begin + open.size();
  const std::size_t end = text.find(close, body);
  if (end == std::string::npos) return std::nullopt;
  return std::make_pair(begin, end + close.size());
}

inline std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace agentdetail

/// Extract the think block and exactly one action from an assistant message.
/// Malformation is data, not an exception.
inline ParsedAssistant parse_assistant(const std::string& text) {
  using agentdetail::find_tag;
  ParsedAssistant out;

  if (auto think = find_tag(text, "think")) {
    out.think = text.substr(think->first + 7, think->second - think->first - 7 - 8);
    if (find_tag(text, "think", think->second)) {
      out.malformed = "multiple <think> blocks; each response must contain only one";
      return out;
    }
  }

  const auto tool_call = find_tag(text, "tool_call");
  const auto answer = find_tag(text, "answer");
  if (!tool_call && !answer) {
    out.malformed = "no <tool_call> or <answer> block found";
    return out;
  }

  // First action block in text order wins; the rest are counted and ignored.
  const bool tool_first = tool_call && (!answer || tool_call->first < answer->first);
  std::size_t scan_from = 0;
  if (tool_first) {
    std::string payload = text.substr(tool_call->first + 11, tool_call->second - tool_call->first - 11 - 12);
    payload = agentdetail::trim(payload);
    json parsed = json::parse(payload, nullptr, false);
    if (parsed.is_discarded()) {
      // locate the failure for the diagnostic
      std::string detail;
      try {
        json strict = json::parse(payload);
        detail = strict.dump();  // unreachable; parse above always throws here
      } catch (const std::exception& e) {
        detail = e.what();
      }
      out.malformed = "tool_call payload is not valid JSON: " + detail;
      return out;
    }
    if (!parsed.is_object() || !parsed.contains("name") || !parsed["name"].is_string()) {
      out.malformed = "tool_call payload must be an object with a string \"name\"";
      return out;
    }
    out.action = ParsedAssistant::Action::ToolCall;
    out.tool_name = parsed["name"].get<std::string>();
    if (parsed.contains("arguments")) {
      if (!parsed["arguments"].is_object()) {
        out.malformed = "tool_call \"arguments\" must be an object";
        return out;
      }
      out.arguments = parsed["arguments"];
    }
    scan_from = tool_call->second;
  } else {
    out.action = ParsedAssistant::Action::Answer;
    out.answer = agentdetail::trim(
        text.substr(answer->first + 8, answer->second - answer->first - 8 - 9));
    scan_from = answer->second;
  }

  for (const char* tag : {"tool_call", "answer"}) {
    std::size_t from = scan_from;
    while (auto extra = find_tag(text, tag, from)) {
      ++out.ignored_blocks;
      from = extra->second;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dispatch

/// Mutable per-episode state; exposure, the PTC session, and the shared
/// read-only services.
struct EpisodeRuntime {
  Registry* registry = nullptr;
  SignatureIndex* signatures = nullptr;
  OutputCatalog* catalog = nullptr;
  TokenCounter counter;
  Limits limits;
  ExposureState exposure;
  std::unique_ptr<Session> session;  // created on first code_interpreter call

  TruncationOptions truncation;  // .limit is synced from limits by run_episode

  Session& ensure_session() {
    if (!session) {
      ScriptRuntime rt;
      rt.registry = registry;
      rt.signatures = signatures;
      rt.catalog = catalog;
      rt.exposure = &exposure;
      rt.counter = counter;
      rt.truncation = truncation;
      session = std::make_unique<Session>(rt, limits.step_budget);
    }
    return *session;
  }
};

struct DispatchResult {
  std::string text;                    // response body (unwrapped)
  std::size_t tokens_already_charged = 0;  // apply_fetch charges as it injects
};

namespace agentdetail {

inline std::string legal_operations(ExposurePolicy policy) {
  switch (policy) {
    case ExposurePolicy::AllTools: return "\"<server>:<tool>\" calls";
    case ExposurePolicy::Isl: return "fetch_tools, \"<server>:<tool>\" calls";
    case ExposurePolicy::Itl: return "get_selected_tools, \"<server>:<tool>\" calls";
    case ExposurePolicy::ItlPtc: return "code_interpreter";
  }
  return "";
}

}  // namespace agentdetail

/// Route one tool_call action. Every failure is returned as response text so
/// the agent can observe and recover.
inline DispatchResult dispatch(EpisodeRuntime& rt, const std::string& name, const json& arguments) {
  const ExposurePolicy policy = rt.exposure.policy;

  if (name == "fetch_tools" || name == "get_selected_tools") {
    FetchRequest request;
    request.kind = name == "fetch_tools" ? FetchRequest::Kind::FetchTools
                                         : FetchRequest::Kind::GetSelectedTools;
    if (!arguments.contains("server") || !arguments["server"].is_string())
      return {"Error: " + name + " requires a string \"server\" argument.", 0};
    request.server = arguments["server"].get<std::string>();
    if (request.kind == FetchRequest::Kind::GetSelectedTools) {
      if (!arguments.contains("tools") || !arguments["tools"].is_array())
        return {"Error: get_selected_tools requires a \"tools\" array.", 0};
      for (const json& t : arguments["tools"]) {
        if (!t.is_string()) return {"Error: get_selected_tools tool names must be strings.", 0};
        request.tools.push_back(t.get<std::string>());
      }
    }
    FetchOutcome outcome = apply_fetch(rt.exposure, *rt.registry, request, rt.counter);
    return {outcome.text, rt.counter(outcome.text)};
  }

  if (name == "code_interpreter") {
    if (policy != ExposurePolicy::ItlPtc)
      return {"Error: 'code_interpreter' is not available under policy " +
                  std::string(policy_name(policy)) + ". Legal operations: " +
                  agentdetail::legal_operations(policy) + ".",
              0};
    if (!arguments.contains("code") || !arguments["code"].is_string())
      return {"Error: code_interpreter requires a string \"code\" argument.", 0};
    EvalOutcome outcome = rt.ensure_session().eval_cell(arguments["code"].get<std::string>());
    return {outcome.to_response_text(), 0};
  }

  const std::size_t colon = name.find(':');
  if (colon != std::string::npos) {
    if (policy == ExposurePolicy::ItlPtc)
      return {"Error: direct tool calls are not available under policy ITL_PTC. Legal operations: "
              "code_interpreter.",
              0};
    const std::string server = name.substr(0, colon);
    const std::string tool = name.substr(colon + 1);
    if (!rt.registry->has_server(server)) {
      std::string names;
      for (const std::string& s : rt.registry->server_names()) {
        if (!names.empty()) names += ", ";
        names += s;
      }
      return {"Error: no server named '" + server + "'. Available servers: " + names + ".", 0};
    }
    if (!rt.registry->has_tool(server, tool)) {
      std::string tools;
      for (const ToolSchema& t : rt.registry->list_tools(server)) {
        if (!tools.empty()) tools += ", ";
        tools += t.tool;
      }
      return {"Error: server '" + server + "' has no tool '" + tool + "'. Available tools: [" +
                  tools + "].",
              0};
    }
    try {
      ToolResult result = rt.registry->call_tool(server, tool, arguments);
      TruncationOptions opts = rt.truncation;
      opts.limit = rt.limits.max_response_tokens;
      return {truncate_response(result.raw_text, opts, rt.counter), 0};
    } catch (const Error& e) {
      return {std::string("Error: ") + e.what(), 0};
    }
  }

  return {"Error: unknown tool '" + name + "'. Legal operations for policy " +
              std::string(policy_name(policy)) + ": " + agentdetail::legal_operations(policy) + ".",
          0};
}

// ---------------------------------------------------------------------------
// Episode loop

struct EpisodeConfig {
  std::string task_id;
  std::string trajectory_id;
  std::string task;           // user-visible text, becomes the opening user turn
  std::string concrete_task;  // judge-only reference, stored in the header
  ExposurePolicy policy = ExposurePolicy::Isl;
  Limits limits;
};

namespace agentdetail {

inline void append_turn(Trajectory& traj, ExposureState& exposure, const TokenCounter& counter,
                        TurnRole role, std::string text, SpanRole span,
                        std::size_t already_charged = 0) {
  Turn turn;
  turn.role = role;
  turn.text = std::move(text);
  turn.tokens = counter(turn.text);
  turn.spans.push_back(TurnSpan{0, turn.text.size(), span});
  charge_tokens(exposure, turn.tokens - std::min(turn.tokens, already_charged));
  traj.turns.push_back(std::move(turn));
  traj.ledger_series.push_back(exposure.ledger);
}

inline std::vector<ChatMessage> to_messages(const Trajectory& traj) {
  std::vector<ChatMessage> out;
  for (const Turn& t : traj.turns) {
    const char* role = t.role == TurnRole::Assistant ? "assistant"
                       : t.role == TurnRole::System  ? "system"
                                                     : "user";  // tool responses ride as user turns
    out.push_back({role, t.text});
  }
  return out;
}

constexpr const char* kBestEffortDemand =
    "You have reached the execution limit. Provide your best final answer now, wrapped in "
    "<answer>...</answer> tags.";

}  // namespace agentdetail

/// The inference loop: assistant turn -> dispatch -> tool_response, until an
/// answer, the call cap, or budget exhaustion; caps and budgets force one
/// final best-effort turn so the trajectory stays scoreable.
inline Trajectory run_episode(EpisodeRuntime& rt, const EpisodeConfig& config, LlmClient& llm) {
  using agentdetail::append_turn;

  rt.limits = config.limits;
  rt.truncation.limit = config.limits.max_response_tokens;

  Trajectory traj;
  traj.task_id = config.task_id;
  traj.trajectory_id = config.trajectory_id.empty() ? config.task_id : config.trajectory_id;
  traj.task = config.task;
  traj.concrete_task = config.concrete_task;
  traj.policy = config.policy;
  traj.limits = config.limits;

  InitialContext init = initial_context(config.policy, *rt.registry, config.task, rt.counter,
                                        config.limits.context_budget);
  rt.exposure = init.state;
  // initial_context already charged both prompts; record turns without re-charging.
  {
    Turn system_turn;
    system_turn.role = TurnRole::System;
    system_turn.text = init.system_prompt;
    system_turn.tokens = rt.counter(system_turn.text);
    system_turn.spans.push_back(TurnSpan{0, system_turn.text.size(), SpanRole::Scaffold});
    traj.turns.push_back(std::move(system_turn));
    traj.ledger_series.push_back(rt.counter(init.system_prompt));

    Turn user_turn;
    user_turn.role = TurnRole::User;
    user_turn.text = init.user_prompt;
    user_turn.tokens = rt.counter(user_turn.text);
    user_turn.spans.push_back(TurnSpan{0, user_turn.text.size(), SpanRole::Scaffold});
    traj.turns.push_back(std::move(user_turn));
    traj.ledger_series.push_back(rt.exposure.ledger);
  }

  bool reprompted = false;
  while (true) {
    std::string assistant_text;
    try {
      assistant_text = llm.complete(agentdetail::to_messages(traj));
    } catch (const Error&) {
      traj.termination = Termination::ErrorStall;
      return traj;  // partial trajectory preserved
    }
    append_turn(traj, rt.exposure, rt.counter, TurnRole::Assistant, assistant_text,
                SpanRole::Model);
    ++traj.model_turn_count;

    ParsedAssistant parsed = parse_assistant(assistant_text);
    if (parsed.malformed) {
      if (reprompted) {
        traj.termination = Termination::ErrorStall;
        return traj;
      }
      reprompted = true;
      append_turn(traj, rt.exposure, rt.counter, TurnRole::User,
                  "Your previous response could not be parsed: " + *parsed.malformed +
                      ". Reply with exactly one <tool_call>...</tool_call> or "
                      "<answer>...</answer> block.",
                  SpanRole::Scaffold);
      continue;
    }

    if (parsed.action == ParsedAssistant::Action::Answer) {
      traj.final_answer = parsed.answer;
      traj.termination = Termination::Answered;
      return traj;
    }

    // tool call
    if (traj.tool_call_count >= config.limits.max_tool_calls) {
      append_turn(traj, rt.exposure, rt.counter, TurnRole::User, agentdetail::kBestEffortDemand,
                  SpanRole::Scaffold);
      try {
        std::string final_text = llm.complete(agentdetail::to_messages(traj));
        append_turn(traj, rt.exposure, rt.counter, TurnRole::Assistant, final_text,
                    SpanRole::Model);
        ++traj.model_turn_count;
      } catch (const Error&) {
      }
      traj.termination = Termination::CallCap;
      return traj;
    }

    DispatchResult result = dispatch(rt, parsed.tool_name, parsed.arguments);
    ++traj.tool_call_count;
    std::string body = result.text;
    if (parsed.ignored_blocks > 0) {
      body += "\n\n[notice] Only the first action block was executed; " +
              std::to_string(parsed.ignored_blocks) + " additional block(s) were ignored.";
    }
    append_turn(traj, rt.exposure, rt.counter, TurnRole::ToolResponse,
                "<tool_response>\n" + body + "\n</tool_response>", SpanRole::ToolOutput,
                result.tokens_already_charged);

    if (rt.exposure.budget_exhausted) {
      append_turn(traj, rt.exposure, rt.counter, TurnRole::User, agentdetail::kBestEffortDemand,
                  SpanRole::Scaffold);
      try {
        std::string final_text = llm.complete(agentdetail::to_messages(traj));
        append_turn(traj, rt.exposure, rt.counter, TurnRole::Assistant, final_text,
                    SpanRole::Model);
        ++traj.model_turn_count;
      } catch (const Error&) {
      }
      traj.termination = Termination::ContextBudget;
      return traj;
    }
  }
}

// ---------------------------------------------------------------------------
// Token-role masks

struct MaskedToken {
  std::string token;
  SpanRole role = SpanRole::Scaffold;
};

/// Aligned (token, role) sequence across the whole trajectory. Every
/// TOOL_OUTPUT token is maskable by downstream trainers.
inline std::vector<MaskedToken> token_role_mask(const Trajectory& traj) {
  std::vector<MaskedToken> out;
  for (const Turn& turn : traj.turns) {
    for (const TokenSpan& span : tokenize_spans(turn.text)) {
      SpanRole role = SpanRole::Scaffold;
      for (const TurnSpan& ts : turn.spans) {
        if (span.begin >= ts.begin && span.begin < ts.end) {
          role = ts.role;
          break;
        }
      }
      out.push_back({turn.text.substr(span.begin, span.end - span.begin), role});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL persistence

inline std::string trajectory_to_jsonl(const Trajectory& traj) {
  std::string out;
  json header = {{"type", "header"},
                 {"task_id", traj.task_id},
                 {"trajectory_id", traj.trajectory_id},
                 {"task", traj.task},
                 {"concrete_task", traj.concrete_task},
                 {"policy", policy_name(traj.policy)},
                 {"limits",
                  {{"max_tool_calls", traj.limits.max_tool_calls},
                   {"max_response_tokens", traj.limits.max_response_tokens},
                   {"context_budget", traj.limits.context_budget},
                   {"step_budget", traj.limits.step_budget}}}};
  out += header.dump() + "\n";
  for (const Turn& turn : traj.turns) {
    json spans = json::array();
    for (const TurnSpan& s : turn.spans)
      spans.push_back({{"begin", s.begin}, {"end", s.end}, {"role", span_role_name(s.role)}});
    json line = {{"type", "turn"},
                 {"role", turn_role_name(turn.role)},
                 {"text", turn.text},
                 {"spans", std::move(spans)},
                 {"tokens", turn.tokens}};
    out += line.dump() + "\n";
  }
  json summary = {{"type", "summary"},
                  {"termination", termination_name(traj.termination)},
                  {"tool_call_count", traj.tool_call_count},
                  {"model_turn_count", traj.model_turn_count},
                  {"final_answer", traj.final_answer ? json(*traj.final_answer) : json(nullptr)},
                  {"ledger_series", traj.ledger_series}};
  out += summary.dump() + "\n";
  return out;
}

inline void write_trajectory_jsonl(const Trajectory& traj, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << trajectory_to_jsonl(traj);
  }
  std::filesystem::rename(tmp, path);
}

inline Trajectory read_trajectory_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("trajectory-file", "cannot open trajectory '" + path.string() + "'");
  Trajectory traj;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) throw Error("trajectory-file", "malformed JSONL in " + path.string());
    const std::string type = doc.value("type", "");
    if (type == "header") {
      traj.task_id = doc.value("task_id", "");
      traj.trajectory_id = doc.value("trajectory_id", "");
      traj.task = doc.value("task", "");
      traj.concrete_task = doc.contains("concrete_task") && doc["concrete_task"].is_string()
                               ? doc["concrete_task"].get<std::string>()
                               : "";
      if (auto p = parse_policy(doc.value("policy", "ISL"))) traj.policy = *p;
      if (doc.contains("limits")) {
        const json& l = doc["limits"];
        traj.limits.max_tool_calls = l.value("max_tool_calls", 20);
        traj.limits.max_response_tokens = l.value("max_response_tokens", std::size_t{4000});
        traj.limits.context_budget = l.value("context_budget", std::size_t{31000});
        traj.limits.step_budget = l.value("step_budget", std::size_t{100000});
      }
    } else if (type == "turn") {
      Turn turn;
      const std::string role = doc.value("role", "user");
      turn.role = role == "system"          ? TurnRole::System
                  : role == "assistant"     ? TurnRole::Assistant
                  : role == "tool_response" ? TurnRole::ToolResponse
                                            : TurnRole::User;
      turn.text = doc.value("text", "");
      turn.tokens = doc.value("tokens", std::size_t{0});
      if (doc.contains("spans")) {
        for (const json& s : doc["spans"]) {
          TurnSpan span;
          span.begin = s.value("begin", std::size_t{0});
          span.end = s.value("end", std::size_t{0});
          const std::string r = s.value("role", "SCAFFOLD");
          span.role = r == "MODEL"         ? SpanRole::Model
                      : r == "TOOL_OUTPUT" ? SpanRole::ToolOutput
                                           : SpanRole::Scaffold;
          turn.spans.push_back(span);
        }
      }
      traj.turns.push_back(std::move(turn));
    } else if (type == "summary") {
      const std::string term = doc.value("termination", "error-stall");
      traj.termination = term == "answered"         ? Termination::Answered
                         : term == "call-cap"       ? Termination::CallCap
                         : term == "context-budget" ? Termination::ContextBudget
                                                    : Termination::ErrorStall;
      traj.tool_call_count = doc.value("tool_call_count", 0);
      traj.model_turn_count = doc.value("model_turn_count", 0);
      if (doc.contains("final_answer") && doc["final_answer"].is_string())
        traj.final_answer = doc["final_answer"].get<std::string>();
      if (doc.contains("ledger_series"))
        for (const json& v : doc["ledger_series"]) traj.ledger_series.push_back(v.get<std::size_t>());
    }
  }
  return traj;
}

inline void write_mask_jsonl(const Trajectory& traj, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    for (const MaskedToken& t : token_role_mask(traj)) {
      json line = json::array({t.token, span_role_name(t.role)});
      out << line.dump() << "\n";
    }
  }
  std::filesystem::rename(tmp, path);
}

/// The judge's view of a trajectory: the same text the agent saw, in order,
/// with tool responses as recorded (already truncated). Spans are omitted.
inline std::string render_trajectory_for_judge(const Trajectory& traj) {
  std::string out;
  for (const Turn& turn : traj.turns) {
    const char* label = turn.role == TurnRole::Assistant ? "assistant"
                        : turn.role == TurnRole::System  ? "system"
                                                         : "user";
    out += std::string("[") + label + "]\n" + turn.text + "\n\n";
  }
  return out;
}

}  // namespace toolscope
