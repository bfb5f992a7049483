#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

namespace toolscope {

using json = nlohmann::ordered_json;

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

struct TransportError : Error {
  explicit TransportError(const std::string& message) : Error("transport-failure", message) {}
};

// ---------------------------------------------------------------------------
// Domain types

enum class Transport { StdioSubprocess, HttpEndpoint, InProcess };

inline const char* transport_name(Transport t) {
  switch (t) {
    case Transport::StdioSubprocess: return "stdio";
    case Transport::HttpEndpoint: return "http";
    case Transport::InProcess: return "in-process";
  }
  return "?";
}

struct ServerDescriptor {
  std::string name;
  Transport transport = Transport::InProcess;
  /// stdio: command line; http: endpoint URL; in-process: mock kind.
  std::string address;
  std::map<std::string, std::string> env;
  std::string protocol_version = "2025-06-18";
};

struct ToolSchema {
  std::string server;
  std::string tool;
  std::string description;
  json input_schema = json::object();
  std::optional<json> output_schema;
  std::optional<std::string> output_example;
};

struct ToolResult {
  /// The serialized response exactly as returned, before any truncation.
  std::string raw_text;
  bool is_error = false;
  std::int64_t latency_ms = 0;
};

/// Anything that can answer MCP JSON-RPC requests in-process. Mock servers
/// implement this; the same object can also be served over stdio or HTTP.
class McpHandler {
 public:
  virtual ~McpHandler() = default;
  /// Returns the response object, or null for notifications.
  virtual json handle(const json& request) = 0;
};

// ---------------------------------------------------------------------------
// Connections

namespace detail {

class Connection {
 public:
  virtual ~Connection() = default;
  virtual json request(const std::string& method, const json& params) = 0;
  virtual void notify(const std::string& method, const json& params) = 0;
};

class InProcessConnection : public Connection {
 public:
  explicit InProcessConnection(std::shared_ptr<McpHandler> handler)
      : handler_(std::move(handler)) {}

  json request(const std::string& method, const json& params) override {
    json req = {{"jsonrpc", "2.0"}, {"id", next_id_++}, {"method", method}, {"params", params}};
    json resp = handler_->handle(req);
    if (resp.contains("error")) {
      return resp;  // caller inspects
    }
    return resp;
  }

  void notify(const std::string& method, const json& params) override {
    json req = {{"jsonrpc", "2.0"}, {"method", method}, {"params", params}};
    handler_->handle(req);
  }

 private:
  std::shared_ptr<McpHandler> handler_;
  std::int64_t next_id_ = 1;
};

/// Newline-delimited JSON-RPC over a child process's stdin/stdout.
class StdioConnection : public Connection {
 public:
  StdioConnection(const std::string& command, const std::map<std::string, std::string>& env,
                  int timeout_ms)
      : timeout_ms_(timeout_ms) {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw TransportError("pipe() failed");
    pid_ = fork();
    if (pid_ < 0) throw TransportError("fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      for (const auto& [k, v] : env) setenv(k.c_str(), v.c_str(), 1);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ~StdioConnection() override {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == 0) {
        kill(pid_, SIGTERM);
        waitpid(pid_, &status, 0);
      }
    }
  }

  json request(const std::string& method, const json& params) override {
    json req = {{"jsonrpc", "2.0"}, {"id", next_id_++}, {"method", method}, {"params", params}};
    send_line(req.dump());
    const std::int64_t want_id = req["id"].get<std::int64_t>();
    // Skip server-initiated notifications until our response arrives.
    while (true) {
      json resp = json::parse(recv_line(), nullptr, false);
      if (resp.is_discarded()) throw TransportError("malformed JSON-RPC from server");
      if (resp.contains("id") && !resp["id"].is_null() &&
          resp["id"].get<std::int64_t>() == want_id)
        return resp;
    }
  }

  void notify(const std::string& method, const json& params) override {
    json req = {{"jsonrpc", "2.0"}, {"method", method}, {"params", params}};
    send_line(req.dump());
  }

 private:
  void send_line(std::string line) {
    line += '\n';
    std::size_t off = 0;
    while (off < line.size()) {
      ssize_t n = write(write_fd_, line.data() + off, line.size() - off);
      if (n <= 0) throw TransportError("server process closed stdin pipe");
      off += static_cast<std::size_t>(n);
    }
  }

  std::string recv_line() {
    while (true) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty()) return line;
        continue;
      }
      pollfd pfd{read_fd_, POLLIN, 0};
      int pr = poll(&pfd, 1, timeout_ms_);
      if (pr == 0) throw TransportError("timed out waiting for server response");
      if (pr < 0) throw TransportError("poll() failed");
      char chunk[4096];
      ssize_t n = read(read_fd_, chunk, sizeof(chunk));
      if (n <= 0) throw TransportError("server process exited (EOF on stdout)");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  int timeout_ms_;
  std::string buffer_;
  std::int64_t next_id_ = 1;
};

/// JSON-RPC over HTTP POST. The address is scheme://host[:port][/path].
class HttpConnection : public Connection {
 public:
  HttpConnection(const std::string& url, int timeout_ms) {
    std::string rest = url;
    auto scheme_end = rest.find("://");
    if (scheme_end != std::string::npos) rest = rest.substr(scheme_end + 3);
    auto slash = rest.find('/');
    std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    client_ = std::make_unique<httplib::Client>("http://" + hostport);
    client_->set_connection_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client_->set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  }

  json request(const std::string& method, const json& params) override {
    json req = {{"jsonrpc", "2.0"}, {"id", next_id_++}, {"method", method}, {"params", params}};
    auto res = client_->Post(path_, req.dump(), "application/json");
    if (!res) throw TransportError("HTTP request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw TransportError("HTTP status " + std::to_string(res->status));
    json resp = json::parse(res->body, nullptr, false);
    if (resp.is_discarded()) throw TransportError("malformed JSON-RPC over HTTP");
    return resp;
  }

  void notify(const std::string& method, const json& params) override {
    json req = {{"jsonrpc", "2.0"}, {"method", method}, {"params", params}};
    client_->Post(path_, req.dump(), "application/json");
  }

 private:
  std::unique_ptr<httplib::Client> client_;
  std::string path_;
  std::int64_t next_id_ = 1;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Registry

struct RegistryOptions {
  int call_timeout_ms = 30000;
  int transport_retries = 2;
  int retry_backoff_ms = 250;
};

/// MCP server registry: lazy connections, cached tool listings, tool calls.
/// Shareable across threads; each connection serializes its own requests.
class Registry {
 public:
  explicit Registry(RegistryOptions options = {}) : options_(options) {}

  void register_server(ServerDescriptor descriptor) {
    std::lock_guard lock(mutex_);
    if (descriptor.name.empty()) throw Error("invalid-descriptor", "server name must be non-empty");
    if (entries_.count(descriptor.name))
      throw Error("duplicate-name", "server '" + descriptor.name + "' is already registered");
    order_.push_back(descriptor.name);
    auto entry = std::make_shared<Entry>();
    entry->descriptor = std::move(descriptor);
    entries_[entry->descriptor.name] = std::move(entry);
  }

  /// Registers an in-process server (mock or otherwise).
  void register_handler(const std::string& name, std::shared_ptr<McpHandler> handler,
                        std::string kind = "in-process") {
    {
      std::lock_guard lock(mutex_);
      if (entries_.count(name))
        throw Error("duplicate-name", "server '" + name + "' is already registered");
    }
    ServerDescriptor d;
    d.name = name;
    d.transport = Transport::InProcess;
    d.address = std::move(kind);
    register_server(d);
    std::lock_guard lock(mutex_);
    entries_[name]->handler = std::move(handler);
  }

  std::vector<std::string> server_names() const {
    std::lock_guard lock(mutex_);
    return order_;
  }

  bool has_server(const std::string& name) const {
    std::lock_guard lock(mutex_);
    return entries_.count(name) > 0;
  }

  const ServerDescriptor& descriptor(const std::string& name) const {
    std::lock_guard lock(mutex_);
    return entry(name)->descriptor;
  }

  /// Tools in server-declared order; cached per connection.
  std::vector<ToolSchema> list_tools(const std::string& server) {
    std::shared_ptr<Entry> e;
    {
      std::lock_guard lock(mutex_);
      e = entry(server);
    }
    std::lock_guard elock(e->mutex);
    if (e->tools) return *e->tools;
    json resp = roundtrip(*e, "tools/list", json::object());
    if (resp.contains("error"))
      throw Error("transport-failure", "tools/list failed: " + resp["error"].dump());
    std::vector<ToolSchema> tools;
    for (const json& t : resp["result"]["tools"]) {
      ToolSchema schema;
      schema.server = server;
      schema.tool = t.value("name", "");
      schema.description = t.value("description", "");
      if (t.contains("inputSchema")) schema.input_schema = t["inputSchema"];
      if (t.contains("outputSchema")) schema.output_schema = t["outputSchema"];
      if (t.contains("outputExample") && t["outputExample"].is_string())
        schema.output_example = t["outputExample"].get<std::string>();
      tools.push_back(std::move(schema));
    }
    e->tools = std::move(tools);
    return *e->tools;
  }

  bool has_tool(const std::string& server, const std::string& tool) {
    for (const ToolSchema& t : list_tools(server))
      if (t.tool == tool) return true;
    return false;
  }

  const ToolSchema& tool_schema(const std::string& server, const std::string& tool) {
    list_tools(server);
    std::shared_ptr<Entry> e;
    {
      std::lock_guard lock(mutex_);
      e = entry(server);
    }
    std::lock_guard elock(e->mutex);
    for (const ToolSchema& t : *e->tools)
      if (t.tool == tool) return t;
    throw Error("unknown-tool", "server '" + server + "' has no tool '" + tool + "'");
  }

  /// Tool-level failures come back as ToolResult with is_error set; only
  /// registry misuse and exhausted transports throw.
  ToolResult call_tool(const std::string& server, const std::string& tool, const json& args) {
    if (!has_tool(server, tool))
      throw Error("unknown-tool", "server '" + server + "' has no tool '" + tool + "'");
    std::shared_ptr<Entry> e;
    {
      std::lock_guard lock(mutex_);
      e = entry(server);
    }
    std::lock_guard elock(e->mutex);
    const auto start = std::chrono::steady_clock::now();
    json resp = roundtrip(*e, "tools/call", json{{"name", tool}, {"arguments", args}});
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

    ToolResult result;
    result.latency_ms = elapsed.count();
    if (resp.contains("error")) {
      // Protocol-level refusal; surface it to the agent rather than aborting.
      result.is_error = true;
      result.raw_text = "JSON-RPC error " + resp["error"].value("code", json(0)).dump() + ": " +
                        resp["error"].value("message", "");
      return result;
    }
    const json& res = resp["result"];
    result.is_error = res.value("isError", false);
    std::string text;
    bool first = true;
    if (res.contains("content")) {
      for (const json& item : res["content"]) {
        if (item.value("type", "") == "text") {
          if (!first) text += '\n';
          text += item.value("text", "");
          first = false;
        }
      }
    }
    result.raw_text = std::move(text);
    return result;
  }

 private:
  struct Entry {
    ServerDescriptor descriptor;
    std::shared_ptr<McpHandler> handler;  // in-process only
    std::unique_ptr<detail::Connection> connection;
    bool initialized = false;
    std::optional<std::vector<ToolSchema>> tools;
    std::mutex mutex;
  };

  std::shared_ptr<Entry> entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw Error("unknown-server", "no server named '" + name + "' is registered");
    return it->second;
  }

  void connect(Entry& e) {
    if (e.connection && e.initialized) return;
    switch (e.descriptor.transport) {
      case Transport::InProcess:
        if (!e.handler)
          throw TransportError("in-process server '" + e.descriptor.name + "' has no handler");
        e.connection = std::make_unique<detail::InProcessConnection>(e.handler);
        break;
      case Transport::StdioSubprocess:
        e.connection = std::make_unique<detail::StdioConnection>(e.descriptor.address,
                                                                 e.descriptor.env,
                                                                 options_.call_timeout_ms);
        break;
      case Transport::HttpEndpoint:
        e.connection = std::make_unique<detail::HttpConnection>(e.descriptor.address,
                                                                options_.call_timeout_ms);
        break;
    }
    json init_params = {{"protocolVersion", e.descriptor.protocol_version},
                        {"capabilities", json::object()},
                        {"clientInfo", {{"name", "toolscope"}, {"version", "0.1"}}}};
    json resp = e.connection->request("initialize", init_params);
    if (resp.contains("error"))
      throw TransportError("initialize refused by '" + e.descriptor.name + "': " +
                           resp["error"].dump());
    e.connection->notify("notifications/initialized", json::object());
    e.initialized = true;
  }

  json roundtrip(Entry& e, const std::string& method, const json& params) {
    int attempt = 0;
    while (true) {
      try {
        connect(e);
        return e.connection->request(method, params);
      } catch (const TransportError& err) {
        e.connection.reset();
        e.initialized = false;
        e.tools.reset();  // cache is per connection
        if (attempt >= options_.transport_retries) {
          throw TransportError("server '" + e.descriptor.name + "' (" +
                               transport_name(e.descriptor.transport) + " " + e.descriptor.address +
                               "): " + err.what());
        }
        ++attempt;
        std::this_thread::sleep_for(std::chrono::milliseconds(options_.retry_backoff_ms * attempt));
      }
    }
  }

  RegistryOptions options_;
  mutable std::mutex mutex_;
  std::vector<std::string> order_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

}  // namespace toolscope
