#pragma once

#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "toolscope/protocol.hpp"

namespace toolscope {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

/// Chat-completion contract: ordered messages in, one assistant text out.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

/// Scripted stub for tests and replays: ignores the input and returns the
/// recorded assistant messages in order.
class ReplayClient : public LlmClient {
 public:
  explicit ReplayClient(std::vector<std::string> turns) : turns_(std::move(turns)) {}

  /// Replay files hold assistant messages separated by "---TURN---" lines.
  static std::vector<std::string> parse_replay(const std::string& content) {
    std::vector<std::string> turns;
    std::string current;
    std::istringstream in(content);
    std::string line;
    auto flush = [&]() {
      // trim leading/trailing blank lines, keep interior bytes
      std::size_t begin = current.find_first_not_of('\n');
      std::size_t end = current.find_last_not_of('\n');
      turns.push_back(begin == std::string::npos ? ""
                                                 : current.substr(begin, end - begin + 1));
      current.clear();
    };
    while (std::getline(in, line)) {
      if (line == "---TURN---") {
        flush();
        continue;
      }
      current += line;
      current += '\n';
    }
    if (!current.empty()) flush();
    return turns;
  }

  static ReplayClient from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("replay-file", "cannot open replay file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return ReplayClient(parse_replay(buffer.str()));
  }

  std::string complete(const std::vector<ChatMessage>&) override {
    if (next_ >= turns_.size())
      throw Error("replay-exhausted", "replay script exhausted after " +
                                          std::to_string(turns_.size()) + " turns");
    return turns_[next_++];
  }

  std::size_t remaining() const { return turns_.size() - next_; }

 private:
  std::vector<std::string> turns_;
  std::size_t next_ = 0;
};

/// Adapter for ad-hoc stubs in tests.
class FnClient : public LlmClient {
 public:
  using Fn = std::function<std::string(const std::vector<ChatMessage>&)>;
  explicit FnClient(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const std::vector<ChatMessage>& messages) override { return fn_(messages); }

 private:
  Fn fn_;
};

struct HttpLlmOptions {
  std::string url;  // e.g. http://host:port/v1/chat/completions
  std::string model;
  std::string api_key_env = "LLM_API_KEY";
  double temperature = 1.0;  // rollout default
  int timeout_ms = 120000;
  int retries = 2;
};

/// OpenAI-style chat-completions client. Sampling fields pass through
/// opaquely; the endpoint decides what they mean.
class HttpChatClient : public LlmClient {
 public:
  explicit HttpChatClient(HttpLlmOptions options) : options_(std::move(options)) {
    std::string rest = options_.url;
    auto scheme_end = rest.find("://");
    if (scheme_end != std::string::npos) rest = rest.substr(scheme_end + 3);
    auto slash = rest.find('/');
    host_ = slash == std::string::npos ? rest : rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/v1/chat/completions" : rest.substr(slash);
  }

  std::string complete(const std::vector<ChatMessage>& messages) override {
    json body;
    body["model"] = options_.model;
    body["temperature"] = options_.temperature;
    json msgs = json::array();
    for (const ChatMessage& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = std::move(msgs);

    httplib::Headers headers;
    if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);

    int attempt = 0;
    while (true) {
      httplib::Client client("http://" + host_);
      client.set_connection_timeout(options_.timeout_ms / 1000);
      client.set_read_timeout(options_.timeout_ms / 1000);
      auto res = client.Post(path_, headers, body.dump(), "application/json");
      if (res && res->status == 200) {
        json parsed = json::parse(res->body, nullptr, false);
        if (!parsed.is_discarded() && parsed.contains("choices") && !parsed["choices"].empty()) {
          const json& msg = parsed["choices"][0]["message"];
          return msg.value("content", "");
        }
        throw Error("llm-protocol", "malformed chat-completions response");
      }
      if (attempt++ >= options_.retries) {
        std::string why = res ? ("HTTP status " + std::to_string(res->status))
                              : httplib::to_string(res.error());
        throw TransportError("LLM endpoint " + options_.url + ": " + why);
      }
    }
  }

 private:
  HttpLlmOptions options_;
  std::string host_;
  std::string path_;
};

}  // namespace toolscope
