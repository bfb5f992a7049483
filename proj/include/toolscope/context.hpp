#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "toolscope/prompts.hpp"
#include "toolscope/protocol.hpp"
#include "toolscope/schema.hpp"
#include "toolscope/tokens.hpp"

namespace toolscope {

enum class ExposurePolicy { AllTools, Isl, Itl, ItlPtc };

inline const char* policy_name(ExposurePolicy p) {
  switch (p) {
    case ExposurePolicy::AllTools: return "ALL_TOOLS";
    case ExposurePolicy::Isl: return "ISL";
    case ExposurePolicy::Itl: return "ITL";
    case ExposurePolicy::ItlPtc: return "ITL_PTC";
  }
  return "?";
}

inline std::optional<ExposurePolicy> parse_policy(const std::string& name) {
  if (name == "ALL_TOOLS") return ExposurePolicy::AllTools;
  if (name == "ISL") return ExposurePolicy::Isl;
  if (name == "ITL") return ExposurePolicy::Itl;
  if (name == "ITL_PTC") return ExposurePolicy::ItlPtc;
  return std::nullopt;
}

enum class Materialization { None, NamesOnly, Selected, Full };

struct ServerExposure {
  Materialization level = Materialization::None;
  std::set<std::string> selected;  // tool names, meaningful when level == Selected
};

/// Which servers/tools are currently materialized in the prompt, plus the
/// episode's token ledger. Episode-local, single-threaded.
struct ExposureState {
  ExposurePolicy policy = ExposurePolicy::Isl;
  std::map<std::string, ServerExposure> materialized;
  std::size_t ledger = 0;
  std::size_t budget = 31000;
  bool budget_exhausted = false;
};

/// Ledger charge. Exhaustion is a flag, never an exception: the agent loop
/// must still obtain a best-effort answer.
inline void charge(ExposureState& state, std::string_view text, const TokenCounter& counter) {
  state.ledger += counter(text);
  if (state.ledger > state.budget) state.budget_exhausted = true;
}

inline void charge_tokens(ExposureState& state, std::size_t tokens) {
  state.ledger += tokens;
  if (state.ledger > state.budget) state.budget_exhausted = true;
}

// ---------------------------------------------------------------------------
// Response truncation

enum class TruncationStrategy { Head, HeadTail };
enum class TruncationUnit { Tokens, Chars };

struct TruncationOptions {
  std::size_t limit = 4000;
  TruncationStrategy strategy = TruncationStrategy::Head;
  TruncationUnit unit = TruncationUnit::Tokens;
};

namespace contextdetail {

inline std::string marker_text(std::size_t dropped, TruncationUnit unit) {
  return "\n...[truncated " + std::to_string(dropped) +
         (unit == TruncationUnit::Tokens ? " tokens]" : " chars]");
}

}  // namespace contextdetail

/// Keep a head (or head+tail) portion so that content plus marker fits the
/// limit. Identity under the limit; idempotent on its own output.
inline std::string truncate_response(std::string_view text, const TruncationOptions& options,
                                     const TokenCounter& counter) {
  if (options.unit == TruncationUnit::Chars) {
    if (text.size() <= options.limit) return std::string(text);
    const std::size_t marker_reserve = contextdetail::marker_text(text.size(), options.unit).size();
    if (options.strategy == TruncationStrategy::Head) {
      const std::size_t keep = options.limit > marker_reserve + 1 ? options.limit - marker_reserve : 1;
      return std::string(text.substr(0, keep)) +
             contextdetail::marker_text(text.size() - keep, options.unit);
    }
    const std::size_t keep = options.limit > marker_reserve + 2 ? options.limit - marker_reserve : 2;
    const std::size_t front = keep - keep / 2;
    const std::size_t back = keep / 2;
    return std::string(text.substr(0, front)) +
           contextdetail::marker_text(text.size() - keep, options.unit) + "...\n" +
           std::string(text.substr(text.size() - back));
  }

  const std::vector<TokenSpan> spans = tokenize_spans(text);
  if (spans.size() <= options.limit) return std::string(text);
  // The marker's own token count does not depend on the digit value.
  const std::size_t marker_tokens = counter(contextdetail::marker_text(0, options.unit));
  if (options.strategy == TruncationStrategy::Head) {
    std::size_t keep = options.limit > marker_tokens ? options.limit - marker_tokens : 1;
    if (keep < 1) keep = 1;
    const std::size_t cut = spans[keep - 1].end;
    return std::string(text.substr(0, cut)) +
           contextdetail::marker_text(spans.size() - keep, options.unit);
  }
  const std::size_t tail_tokens = counter("...\n");
  std::size_t keep = options.limit > marker_tokens + tail_tokens
                         ? options.limit - marker_tokens - tail_tokens
                         : 2;
  if (keep < 2) keep = 2;
  const std::size_t front = keep - keep / 2;
  const std::size_t back = keep / 2;
  const std::size_t cut_front = spans[front - 1].end;
  const std::size_t cut_back = spans[spans.size() - back].begin;
  return std::string(text.substr(0, cut_front)) +
         contextdetail::marker_text(spans.size() - keep, options.unit) + "...\n" +
         std::string(text.substr(cut_back));
}

inline std::string truncate_response(std::string_view text, std::size_t limit_tokens,
                                     const TokenCounter& counter) {
  TruncationOptions options;
  options.limit = limit_tokens;
  return truncate_response(text, options, counter);
}

// ---------------------------------------------------------------------------
// Initial context per exposure policy

struct InitialContext {
  std::string system_prompt;
  std::string user_prompt;
  ExposureState state;
};

/// Assemble the episode-opening prompts and the exposure state for a policy.
///   ALL_TOOLS — every raw schema inlined, all servers FULL.
///   ISL       — server names only; fetch_tools materializes whole servers.
///   ITL       — names-only tool lists; get_selected_tools materializes subsets.
///   ITL_PTC   — names-only tool lists; code_interpreter + get_tools_info.
inline InitialContext initial_context(ExposurePolicy policy, Registry& registry,
                                      const std::string& task, const TokenCounter& counter,
                                      std::size_t budget = 31000) {
  InitialContext out;
  out.state.policy = policy;
  out.state.budget = budget;

  const std::vector<std::string> servers = registry.server_names();
  std::string preamble;
  switch (policy) {
    case ExposurePolicy::AllTools: {
      out.system_prompt = prompts::isl_system_prompt();
      preamble = std::string(prompts::kServersAvailableLine);
      for (const std::string& s : servers) {
        preamble += "\n\n" + render_full_schemas(registry, s);
        out.state.materialized[s].level = Materialization::Full;
      }
      break;
    }
    case ExposurePolicy::Isl: {
      out.system_prompt = prompts::isl_system_prompt();
      preamble = std::string(prompts::kServersAvailableLine);
      for (const std::string& s : servers) {
        preamble += "\n" + s;
        out.state.materialized[s].level = Materialization::None;
      }
      break;
    }
    case ExposurePolicy::Itl:
    case ExposurePolicy::ItlPtc: {
      out.system_prompt = policy == ExposurePolicy::Itl ? std::string(prompts::kItlSystemPrompt)
                                                        : std::string(prompts::kPtcSystemPrompt);
      preamble = std::string(policy == ExposurePolicy::Itl ? prompts::kServersAvailableLine
                                                           : prompts::kServersAvailablePtcLine);
      for (const std::string& s : servers) {
        preamble += "\n\n" + render_tool_names(registry, s);
        out.state.materialized[s].level = Materialization::NamesOnly;
      }
      break;
    }
  }
  out.user_prompt = task.empty() ? preamble : task + "\n\n" + preamble;
  charge(out.state, out.system_prompt, counter);
  charge(out.state, out.user_prompt, counter);
  return out;
}

// ---------------------------------------------------------------------------
// Meta-operations (fetch_tools / get_selected_tools)

struct FetchRequest {
  enum class Kind { FetchTools, GetSelectedTools };
  Kind kind = Kind::FetchTools;
  std::string server;
  std::vector<std::string> tools;  // GetSelectedTools only
};

struct FetchOutcome {
  std::string text;      // schema blocks, notice, or recoverable error text
  bool is_error = false;
};

/// Apply a meta-operation to the exposure state. Errors come back as text so
/// the agent can observe and recover; the ledger is charged with whatever
/// text is injected.
inline FetchOutcome apply_fetch(ExposureState& state, Registry& registry, const FetchRequest& request,
                                const TokenCounter& counter) {
  auto finish = [&state, &counter](std::string text, bool is_error) {
    charge(state, text, counter);
    return FetchOutcome{std::move(text), is_error};
  };

  if (request.kind == FetchRequest::Kind::FetchTools && state.policy != ExposurePolicy::Isl)
    return finish("Error: 'fetch_tools' is not available under policy " +
                      std::string(policy_name(state.policy)) + ".",
                  true);
  if (request.kind == FetchRequest::Kind::GetSelectedTools && state.policy != ExposurePolicy::Itl)
    return finish("Error: 'get_selected_tools' is not available under policy " +
                      std::string(policy_name(state.policy)) + ".",
                  true);

  if (!registry.has_server(request.server)) {
    std::string names;
    for (const std::string& s : registry.server_names()) {
      if (!names.empty()) names += ", ";
      names += s;
    }
    return finish("Error: no server named '" + request.server + "' is registered. Available servers: " +
                      names + ".",
                  true);
  }

  ServerExposure& exposure = state.materialized[request.server];

  if (request.kind == FetchRequest::Kind::FetchTools) {
    if (exposure.level == Materialization::Full)
      return finish("Tools for server='" + request.server + "' are already loaded.", false);
    std::string block = render_full_schemas(registry, request.server);
    exposure.level = Materialization::Full;
    return finish(std::move(block), false);
  }

  // get_selected_tools
  std::vector<std::string> fresh;
  std::vector<std::string> already;
  for (const std::string& name : request.tools) {
    if (!registry.has_tool(request.server, name)) {
      std::string avail;
      for (const ToolSchema& t : registry.list_tools(request.server)) {
        if (!avail.empty()) avail += ", ";
        avail += t.tool;
      }
      return finish("Error: server '" + request.server + "' has no tool '" + name +
                        "'. Available tools: [" + avail + "].",
                    true);
    }
    if (exposure.level == Materialization::Full || exposure.selected.count(name))
      already.push_back(name);
    else
      fresh.push_back(name);
  }

  std::string text;
  if (!fresh.empty()) {
    text = render_full_schemas(registry, request.server, fresh);
    if (exposure.level != Materialization::Full) {
      exposure.level = Materialization::Selected;
      for (const std::string& name : fresh) exposure.selected.insert(name);
    }
  }
  if (!already.empty()) {
    std::string list;
    for (const std::string& name : already) {
      if (!list.empty()) list += ", ";
      list += name;
    }
    if (!text.empty()) text += "\n\n";
    text += "Already loaded: " + list + ".";
  }
  if (text.empty()) text = "Already loaded.";
  return finish(std::move(text), false);
}

/// Materialization bookkeeping for the PTC path, where tool selection happens
/// through get_tools_info inside the program.
inline void mark_selected(ExposureState& state, const std::string& server,
                          const std::vector<std::string>& tools) {
  ServerExposure& exposure = state.materialized[server];
  if (exposure.level == Materialization::Full) return;
  exposure.level = Materialization::Selected;
  for (const std::string& t : tools) exposure.selected.insert(t);
}

}  // namespace toolscope
