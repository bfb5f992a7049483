#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "toolscope/context.hpp"
#include "toolscope/levenshtein.hpp"
#include "toolscope/schema.hpp"
#include "toolscope/script/parser.hpp"
#include "toolscope/value.hpp"

namespace toolscope {

/// Server objects carry only the display name; resolution goes through the
/// runtime's signature index, so a stale object cannot smuggle state.
struct ServerObject {
  std::string name;
};

struct HintedError {
  enum class Kind { UnknownTool, ArgumentError, OutputAccess, Syntax, Budget, Runtime };
  Kind kind = Kind::Runtime;
  std::string message;
  std::string hint;  // empty when there is nothing useful to add
  std::optional<ToolOrigin> origin;

  const char* kind_name() const {
    switch (kind) {
      case Kind::UnknownTool: return "unknown-tool";
      case Kind::ArgumentError: return "argument-error";
      case Kind::OutputAccess: return "output-access";
      case Kind::Syntax: return "syntax";
      case Kind::Budget: return "budget";
      case Kind::Runtime: return "runtime";
    }
    return "?";
  }

  std::string to_text() const {
    std::string out = "Error (" + std::string(kind_name()) + "): " + message;
    if (!hint.empty()) out += "\nHint: " + hint;
    return out;
  }
};

/// Everything a session needs to reach the outside world. The catalog and
/// exposure pointers are optional.
struct ScriptRuntime {
  Registry* registry = nullptr;
  SignatureIndex* signatures = nullptr;
  OutputCatalog* catalog = nullptr;
  ExposureState* exposure = nullptr;
  TokenCounter counter;
  TruncationOptions truncation;
};

struct EvalOutcome {
  std::optional<std::string> display;
  std::string log;
  std::optional<HintedError> error;

  /// The text surfaced to the agent as the cell's tool response.
  std::string to_response_text() const {
    std::string out = log;
    auto append = [&out](const std::string& text) {
      if (!out.empty() && out.back() != '\n') out += '\n';
      out += text;
    };
    if (error) append(error->to_text());
    else if (display) append(*display);
    if (out.empty()) out = "(cell executed, no output)";
    return out;
  }
};

class Session;

namespace script::detail {

inline std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const std::string& n : names) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

class Evaluator {
 public:
  Evaluator(Session& session, ScriptRuntime& runtime, std::size_t budget, std::string& log)
      : session_(session), runtime_(runtime), steps_(budget), log_(log) {}

  std::optional<Value> exec_top(const Block& block);

 private:
  // --- bookkeeping ---------------------------------------------------------

  void step() {
    if (steps_ == 0)
      throw HintedError{HintedError::Kind::Budget,
                        "step budget exhausted; the cell was aborted (likely an unbounded loop)"};
    --steps_;
  }

  void charge_steps(std::size_t n) {
    if (n > steps_)
      throw HintedError{HintedError::Kind::Budget,
                        "step budget exhausted while materializing a large sequence"};
    steps_ -= n;
  }

  [[noreturn]] void runtime_error(std::string message, std::string hint = "") {
    throw HintedError{HintedError::Kind::Runtime, std::move(message), std::move(hint)};
  }

  [[noreturn]] void argument_error(std::string message, std::optional<ToolOrigin> origin = {}) {
    HintedError e;
    e.kind = HintedError::Kind::ArgumentError;
    e.message = std::move(message);
    e.origin = std::move(origin);
    throw e;
  }

  /// Subscript failure on a value: output-access (with the recorded output
  /// skeleton) when the value came from a tool, plain runtime otherwise.
  [[noreturn]] void access_error(const Value& container, std::string message,
                                 const std::string& prefix_hint = "") {
    HintedError e;
    e.message = std::move(message);
    if (container.origin()) {
      e.kind = HintedError::Kind::OutputAccess;
      e.origin = *container.origin();
      std::string hint = prefix_hint;
      if (hint.empty())
        hint = "Check the output logs or use get_tools_info(['" + container.origin()->tool +
               "']) to see the output format.";
      if (runtime_.catalog) {
        if (auto rec = runtime_.catalog->lookup(container.origin()->server, container.origin()->tool);
            rec && rec->skeleton != "unknown") {
          hint += " Recorded output schema for '" + rec->server + ":" + rec->tool +
                  "': " + rec->skeleton;
        }
      }
      e.hint = std::move(hint);
    } else {
      e.kind = HintedError::Kind::Runtime;
    }
    throw e;
  }

  // --- statements ----------------------------------------------------------

  std::optional<Value> exec(const script::Stmt& stmt) {
    step();
    using namespace script;
    if (const auto* s = std::get_if<ExprStmt>(&stmt.node)) return eval(*s->expr);
    if (const auto* s = std::get_if<AssignStmt>(&stmt.node)) {
      Value value = eval(*s->value);
      assign(*s->target, value);
      return std::nullopt;
    }
    if (const auto* s = std::get_if<IfStmt>(&stmt.node)) {
      for (const auto& [cond, body] : s->branches) {
        if (eval(*cond).truthy()) {
          exec_block(body);
          return std::nullopt;
        }
      }
      exec_block(s->else_body);
      return std::nullopt;
    }
    if (const auto* s = std::get_if<ForStmt>(&stmt.node)) {
      std::vector<Value> items = iter_values(eval(*s->iterable));
      for (Value& item : items) {
        step();
        bind_targets(s->targets, item);
        exec_block(s->body);
      }
      return std::nullopt;
    }
    if (const auto* s = std::get_if<WhileStmt>(&stmt.node)) {
      while (eval(*s->condition).truthy()) {
        step();
        exec_block(s->body);
      }
      return std::nullopt;
    }
    if (const auto* s = std::get_if<ImportStmt>(&stmt.node)) {
      exec_import(*s);
      return std::nullopt;
    }
    return std::nullopt;  // pass
  }

  void exec_block(const script::Block& block) {
    for (const script::Stmt& stmt : block) exec(stmt);
  }

  void exec_import(const script::ImportStmt& imp);

  void assign(const script::Expr& target, Value value);

  void bind_targets(const std::vector<std::string>& targets, Value& item);

  // --- expressions ---------------------------------------------------------

  Value eval(const script::Expr& expr) {
    step();
    using namespace script;
    if (const auto* e = std::get_if<LiteralExpr>(&expr.node)) return e->value;
    if (const auto* e = std::get_if<NameExpr>(&expr.node)) return lookup(e->id);
    if (const auto* e = std::get_if<ListExpr>(&expr.node)) {
      ValueList items;
      items.reserve(e->items.size());
      for (const ExprPtr& item : e->items) items.push_back(eval(*item));
      return Value::list(std::move(items));
    }
    if (const auto* e = std::get_if<TupleExpr>(&expr.node)) {
      ValueList items;
      items.reserve(e->items.size());
      for (const ExprPtr& item : e->items) items.push_back(eval(*item));
      return Value::tuple(std::move(items));
    }
    if (const auto* e = std::get_if<MapExpr>(&expr.node)) {
      ValueMap entries;
      for (const auto& [k, v] : e->items) {
        Value key = eval(*k);
        check_map_key(key);
        map_set(entries, key, eval(*v));
      }
      return Value::map(std::move(entries));
    }
    if (const auto* e = std::get_if<UnaryExpr>(&expr.node)) {
      Value v = eval(*e->operand);
      if (v.is_int()) return Value::integer(e->op == '-' ? -v.as_int() : v.as_int());
      if (v.is_float()) return Value::real(e->op == '-' ? -v.as_float() : v.as_float());
      if (v.is_bool()) return Value::integer(e->op == '-' ? -(v.as_bool() ? 1 : 0) : (v.as_bool() ? 1 : 0));
      runtime_error(std::string("bad operand type for unary ") + e->op + ": '" + v.kind_name() + "'");
    }
    if (const auto* e = std::get_if<NotExpr>(&expr.node))
      return Value::boolean(!eval(*e->operand).truthy());
    if (const auto* e = std::get_if<BinaryExpr>(&expr.node))
      return binary_op(e->op, eval(*e->lhs), eval(*e->rhs));
    if (const auto* e = std::get_if<BoolExpr>(&expr.node)) {
      Value lhs = eval(*e->lhs);
      if (e->is_and) return lhs.truthy() ? eval(*e->rhs) : lhs;
      return lhs.truthy() ? lhs : eval(*e->rhs);
    }
    if (const auto* e = std::get_if<CompareExpr>(&expr.node))
      return compare(e->op, eval(*e->lhs), eval(*e->rhs));
    if (const auto* e = std::get_if<TernaryExpr>(&expr.node))
      return eval(*e->condition).truthy() ? eval(*e->then_value) : eval(*e->else_value);
    if (const auto* e = std::get_if<CallExpr>(&expr.node)) return eval_call(*e);
    if (const auto* e = std::get_if<AttributeExpr>(&expr.node))
      return eval_attribute(eval(*e->object), e->name);
    if (const auto* e = std::get_if<SubscriptExpr>(&expr.node)) {
      Value obj = eval(*e->object);
      if (e->slice) return eval_slice(obj, *e->slice);
      return subscript_get(obj, eval(*e->index));
    }
    if (const auto* e = std::get_if<ComprehensionExpr>(&expr.node)) return eval_comprehension(*e);
    runtime_error("internal: unhandled expression");
  }

  Value lookup(const std::string& name);
  Value eval_attribute(Value object, const std::string& name);
  Value eval_call(const script::CallExpr& call);
  Value eval_comprehension(const script::ComprehensionExpr& comp);
  Value eval_slice(const Value& obj, const script::SliceBounds& bounds);

  Value binary_op(script::BinOp op, Value a, Value b);
  Value compare(script::CmpOp op, const Value& a, const Value& b);
  bool less_than(const Value& a, const Value& b);

  Value subscript_get(const Value& obj, const Value& index);
  void check_map_key(const Value& key) {
    if (key.is_list() || key.is_map() || key.is_server() || key.is_tool())
      runtime_error(std::string("unhashable type: '") + key.kind_name() + "'");
  }
  static void map_set(ValueMap& entries, const Value& key, Value value) {
    for (auto& [k, v] : entries) {
      if (k.equals(key)) {
        v = std::move(value);
        return;
      }
    }
    entries.emplace_back(key, std::move(value));
  }

  std::vector<Value> iter_values(const Value& v) {
    switch (v.kind()) {
      case Value::Kind::List: return v.as_list();
      case Value::Kind::Tuple: return v.as_tuple();
      case Value::Kind::Str: {
        std::vector<Value> out;
        for (char c : v.as_str()) out.push_back(Value::str(std::string(1, c)));
        return out;
      }
      case Value::Kind::Map: {
        std::vector<Value> keys;
        for (const auto& [k, val] : v.as_map()) keys.push_back(k);
        return keys;
      }
      default:
        runtime_error(std::string("'") + v.kind_name() + "' object is not iterable");
    }
  }

  // --- calls ---------------------------------------------------------------

  Value call_builtin(const std::string& name, std::vector<Value>& args);
  Value call_method(Value& object, const std::string& name, std::vector<Value>& args);
  Value invoke_tool(const BoundToolRef& tool, const std::vector<Value>& args,
                    const std::vector<std::pair<std::string, Value>>& kwargs);
  Value call_tools_info(const std::string& server, const std::vector<Value>& args);
  Value construct_server(const std::vector<Value>& args);

  json value_to_json(const Value& v) {
    switch (v.kind()) {
      case Value::Kind::None: return nullptr;
      case Value::Kind::Bool: return v.as_bool();
      case Value::Kind::Int: return v.as_int();
      case Value::Kind::Float: return v.as_float();
      case Value::Kind::Str: return v.as_str();
      case Value::Kind::List:
      case Value::Kind::Tuple: {
        json arr = json::array();
        const ValueList& items = v.is_list() ? v.as_list() : v.as_tuple();
        for (const Value& item : items) arr.push_back(value_to_json(item));
        return arr;
      }
      case Value::Kind::Map: {
        json obj = json::object();
        for (const auto& [k, val] : v.as_map()) {
          if (!k.is_str())
            argument_error("tool argument maps must have string keys, got key " + render(k));
          obj[k.as_str()] = value_to_json(val);
        }
        return obj;
      }
      default:
        argument_error(std::string("cannot serialize a ") + v.kind_name() + " as a tool argument");
    }
  }

  Session& session_;
  ScriptRuntime& runtime_;
  std::size_t steps_;
  std::string& log_;
};

}  // namespace script::detail

/// Persistent evaluation state across the cells of one episode. The step
/// budget is re-armed for each cell; globals (including bound server
/// objects) carry over.
class Session {
 public:
  explicit Session(ScriptRuntime runtime, std::size_t step_budget_per_cell = 100000)
      : runtime_(std::move(runtime)), step_budget_(step_budget_per_cell) {}

  EvalOutcome eval_cell(const std::string& source) {
    cells_.push_back(source);
    EvalOutcome outcome;
    script::Block block;
    try {
      block = script::parse(source);
    } catch (const script::SyntaxError& e) {
      HintedError err;
      err.kind = HintedError::Kind::Syntax;
      err.message = "syntax error at line " + std::to_string(e.line) + ", column " +
                    std::to_string(e.col) + ": " + e.message;
      outcome.error = std::move(err);
      return outcome;
    }
    script::detail::Evaluator evaluator(*this, runtime_, step_budget_, outcome.log);
    try {
      std::optional<Value> last = evaluator.exec_top(block);
      if (last && !last->is_none()) outcome.display = display(*last);
    } catch (HintedError& e) {
      // Mutations made before the error persist; the model fixes and re-runs
      // only what failed.
      outcome.error = std::move(e);
    }
    return outcome;
  }

  std::map<std::string, Value>& globals() { return globals_; }
  const std::vector<std::string>& cells() const { return cells_; }
  bool mcpserver_bound() const { return mcpserver_bound_; }
  void bind_mcpserver() { mcpserver_bound_ = true; }
  ScriptRuntime& runtime() { return runtime_; }

 private:
  ScriptRuntime runtime_;
  std::size_t step_budget_;
  std::map<std::string, Value> globals_;
  std::vector<std::string> cells_;
  bool mcpserver_bound_ = false;
};

// ---------------------------------------------------------------------------
// Evaluator implementation

namespace script::detail {

inline std::optional<Value> Evaluator::exec_top(const Block& block) {
  std::optional<Value> last;
  for (std::size_t i = 0; i < block.size(); ++i) {
    std::optional<Value> v = exec(block[i]);
    last = (i + 1 == block.size()) ? std::move(v) : std::nullopt;
  }
  return last;
}

inline void Evaluator::exec_import(const script::ImportStmt& imp) {
  if (imp.names.empty()) {
    log_ += "Warning: import '" + imp.module + "' ignored; no modules are available here.\n";
    return;
  }
  for (const std::string& name : imp.names) {
    if (imp.module == "MCPBench" && name == "MCPServer") {
      session_.bind_mcpserver();
    } else {
      log_ += "Warning: from " + imp.module + " import " + name + " ignored; only MCPServer is available.\n";
    }
  }
}

inline void Evaluator::assign(const script::Expr& target, Value value) {
  using namespace script;
  if (const auto* name = std::get_if<NameExpr>(&target.node)) {
    session_.globals()[name->id] = std::move(value);
    return;
  }
  const auto* sub = std::get_if<SubscriptExpr>(&target.node);
  if (!sub || sub->slice)
    runtime_error("assignment target must be a name or a subscript");
  Value obj = eval(*sub->object);
  Value index = eval(*sub->index);
  if (obj.is_list()) {
    if (!index.is_int() && !index.is_bool())
      access_error(obj, "list indices must be integers, not " + std::string(index.kind_name()));
    std::int64_t i = index.is_bool() ? (index.as_bool() ? 1 : 0) : index.as_int();
    ValueList& items = obj.as_list();
    if (i < 0) i += static_cast<std::int64_t>(items.size());
    if (i < 0 || i >= static_cast<std::int64_t>(items.size()))
      access_error(obj, "list assignment index out of range");
    items[static_cast<std::size_t>(i)] = std::move(value);
    return;
  }
  if (obj.is_map()) {
    check_map_key(index);
    map_set(obj.as_map(), index, std::move(value));
    return;
  }
  if (obj.is_str())
    runtime_error("'str' object does not support item assignment");
  runtime_error(std::string("'") + obj.kind_name() + "' object does not support item assignment");
}

inline void Evaluator::bind_targets(const std::vector<std::string>& targets, Value& item) {
  if (targets.size() == 1) {
    session_.globals()[targets[0]] = item;
    return;
  }
  const ValueList* items = nullptr;
  if (item.is_tuple()) items = &item.as_tuple();
  else if (item.is_list()) items = &item.as_list();
  if (!items)
    runtime_error("cannot unpack non-sequence " + std::string(item.kind_name()));
  if (items->size() != targets.size())
    runtime_error("cannot unpack " + std::to_string(items->size()) + " values into " +
                  std::to_string(targets.size()) + " targets");
  for (std::size_t i = 0; i < targets.size(); ++i) session_.globals()[targets[i]] = (*items)[i];
}

inline Value Evaluator::lookup(const std::string& name) {
  auto& globals = session_.globals();
  auto it = globals.find(name);
  if (it != globals.end()) return it->second;
  if (name == "MCPServer" && !session_.mcpserver_bound())
    throw HintedError{HintedError::Kind::Runtime, "name 'MCPServer' is not defined",
                      "import it first: from MCPBench import MCPServer"};
  runtime_error("name '" + name + "' is not defined");
}

inline Value Evaluator::eval_attribute(Value object, const std::string& name) {
  if (object.is_server()) {
    const ServerRef& ref = object.as_server();
    if (name == "get_tools_info")
      return Value::tool(BoundToolRef{ref.object, ref.name, "__tools_info__"});
    if (runtime_.signatures && runtime_.signatures->find(ref.name, name))
      return Value::tool(BoundToolRef{ref.object, ref.name, name});
    std::vector<std::string> names =
        runtime_.signatures ? runtime_.signatures->function_names(ref.name) : std::vector<std::string>{};
    HintedError e;
    e.kind = HintedError::Kind::UnknownTool;
    e.message = "MCP Server '" + ref.name + "' doesn't have the tool '" + name +
                "', available tools: [" + join_names(names) + "]";
    e.origin = ToolOrigin{ref.name, name};
    if (auto suggestion = closest_match(name, names); suggestion && suggestion->confident)
      e.hint = "did you mean '" + suggestion->candidate + "'?";
    throw e;
  }
  // Methods on plain values are resolved at call time; a bare attribute on a
  // non-server value has no meaning here.
  runtime_error(std::string("'") + object.kind_name() + "' object has no attribute '" + name + "'");
}

inline Value Evaluator::eval_call(const script::CallExpr& call) {
  using namespace script;

  std::vector<Value> args;
  std::vector<std::pair<std::string, Value>> kwargs;
  auto eval_args = [&]() {
    for (const ExprPtr& a : call.args) args.push_back(eval(*a));
    for (const auto& [key, expr] : call.kwargs) kwargs.emplace_back(key, eval(*expr));
  };

  // obj.method(...) / server.tool(...)
  if (const auto* attr = std::get_if<AttributeExpr>(&call.callee->node)) {
    Value object = eval(*attr->object);
    eval_args();
    if (object.is_server()) {
      Value bound = eval_attribute(object, attr->name);  // resolves or raises unknown-tool
      return invoke_tool(bound.as_tool(), args, kwargs);
    }
    if (!kwargs.empty())
      argument_error("method '" + attr->name + "' takes no keyword arguments");
    return call_method(object, attr->name, args);
  }

  // name(...): builtins and the MCPServer constructor are resolvable only in
  // call position, so nothing outside the builtin set leaks into scope.
  if (const auto* name = std::get_if<NameExpr>(&call.callee->node)) {
    auto& globals = session_.globals();
    auto it = globals.find(name->id);
    if (it == globals.end()) {
      if (name->id == "MCPServer") {
        if (!session_.mcpserver_bound())
          throw HintedError{HintedError::Kind::Runtime, "name 'MCPServer' is not defined",
                            "import it first: from MCPBench import MCPServer"};
        eval_args();
        if (!kwargs.empty()) argument_error("MCPServer() takes no keyword arguments");
        return construct_server(args);
      }
      static const std::vector<std::string> kBuiltins = {
          "len",  "sum",   "min",  "max", "abs",  "round",     "sorted", "range",
          "int",  "float", "str",  "bool", "list", "dict",      "enumerate", "zip"};
      if (std::find(kBuiltins.begin(), kBuiltins.end(), name->id) != kBuiltins.end()) {
        eval_args();
        if (!kwargs.empty())
          argument_error("builtin '" + name->id + "' takes no keyword arguments");
        return call_builtin(name->id, args);
      }
      runtime_error("name '" + name->id + "' is not defined");
    }
    Value callee = it->second;
    eval_args();
    if (callee.is_tool()) return invoke_tool(callee.as_tool(), args, kwargs);
    if (callee.is_server())
      runtime_error("'MCPServer' object is not callable; call one of its tools instead");
    runtime_error(std::string("'") + callee.kind_name() + "' object is not callable");
  }

  Value callee = eval(*call.callee);
  eval_args();
  if (callee.is_tool()) return invoke_tool(callee.as_tool(), args, kwargs);
  runtime_error(std::string("'") + callee.kind_name() + "' object is not callable");
}

inline Value Evaluator::construct_server(const std::vector<Value>& args) {
  if (args.size() != 1 || !args[0].is_str())
    argument_error("MCPServer() expects a single server name string, e.g. MCPServer('Time MCP')");
  const std::string& name = args[0].as_str();
  if (!runtime_.registry || !runtime_.registry->has_server(name)) {
    std::vector<std::string> names =
        runtime_.registry ? runtime_.registry->server_names() : std::vector<std::string>{};
    HintedError e;
    e.kind = HintedError::Kind::UnknownTool;
    e.message = "MCP Server '" + name + "' is not available. Registered servers: [" +
                join_names(names) + "]";
    if (auto suggestion = closest_match(name, names); suggestion && suggestion->confident)
      e.hint = "did you mean '" + suggestion->candidate + "'?";
    throw e;
  }
  return Value::server(ServerRef{std::make_shared<ServerObject>(ServerObject{name}), name});
}

inline Value Evaluator::call_tools_info(const std::string& server, const std::vector<Value>& args) {
  if (args.size() != 1 || !(args[0].is_list() || args[0].is_tuple()))
    argument_error("get_tools_info expects one list of tool names, e.g. get_tools_info(['tool'])");
  std::vector<std::string> names;
  const ValueList& items = args[0].is_list() ? args[0].as_list() : args[0].as_tuple();
  for (const Value& item : items) {
    if (!item.is_str()) argument_error("get_tools_info expects tool names as strings");
    names.push_back(item.as_str());
  }
  OutputCatalog empty;
  const OutputCatalog& catalog = runtime_.catalog ? *runtime_.catalog : empty;
  try {
    std::string info = tools_info(*runtime_.signatures, catalog, server, names);
    if (runtime_.exposure) mark_selected(*runtime_.exposure, server, names);
    return Value::str(std::move(info));
  } catch (const Error& err) {
    HintedError e;
    e.kind = HintedError::Kind::UnknownTool;
    e.message = err.what();
    std::vector<std::string> available = runtime_.signatures->function_names(server);
    for (const std::string& n : names) {
      bool known = false;
      for (const ToolSchema& t : runtime_.registry->list_tools(server))
        if (t.tool == n || sanitize_identifier(t.tool) == n) known = true;
      if (!known) {
        if (auto suggestion = closest_match(n, available); suggestion && suggestion->confident)
          e.hint = "did you mean '" + suggestion->candidate + "'?";
        e.origin = ToolOrigin{server, n};
        break;
      }
    }
    throw e;
  }
}

inline Value Evaluator::invoke_tool(const BoundToolRef& tool, const std::vector<Value>& args,
                                    const std::vector<std::pair<std::string, Value>>& kwargs) {
  if (tool.tool == "__tools_info__") {
    if (!kwargs.empty()) argument_error("get_tools_info takes no keyword arguments");
    return call_tools_info(tool.server, args);
  }
  const NormalizedSignature* sig = runtime_.signatures->find(tool.server, tool.tool);
  if (!sig) runtime_error("tool '" + tool.tool + "' is no longer available on '" + tool.server + "'");

  if (!args.empty())
    argument_error("tool arguments must be passed by keyword: " + sig->text(),
                   ToolOrigin{tool.server, sig->tool});

  json wire_args = json::object();
  for (const auto& [key, value] : kwargs) {
    auto wire = sig->wire_name(key);
    if (!wire)
      argument_error("unexpected argument '" + key + "' for " + sig->text(),
                     ToolOrigin{tool.server, sig->tool});
    wire_args[*wire] = value_to_json(value);
  }
  for (const NormalizedParam& p : sig->params) {
    if (p.required && !wire_args.contains(p.wire_name))
      argument_error("missing required argument '" + p.name + "' for " + sig->text(),
                     ToolOrigin{tool.server, sig->tool});
  }

  // Log the invocation with a truncated view of the response; the program
  // itself always sees the full text.
  std::string call_line = tool.server + ":" + sig->tool + "(";
  for (std::size_t i = 0; i < kwargs.size(); ++i) {
    if (i) call_line += ", ";
    call_line += kwargs[i].first + "=" + render(kwargs[i].second);
  }
  call_line += ")";

  ToolResult result;
  try {
    result = runtime_.registry->call_tool(tool.server, sig->tool, wire_args);
  } catch (const Error& err) {
    log_ += "[tool] " + call_line + "\nError: " + err.what() + "\n";
    HintedError e;
    e.kind = HintedError::Kind::Runtime;
    e.message = err.what();
    e.origin = ToolOrigin{tool.server, sig->tool};
    throw e;
  }

  const std::string logged =
      truncate_response(result.raw_text, runtime_.truncation, runtime_.counter);
  log_ += "[tool] " + call_line + "\n" + (result.is_error ? "Error: " : "") + logged + "\n";

  if (result.is_error) {
    HintedError e;
    // The server's own message passes through verbatim; argument problems
    // are exactly the feedback the model needs.
    e.kind = result.raw_text.find("argument") != std::string::npos
                 ? HintedError::Kind::ArgumentError
                 : HintedError::Kind::Runtime;
    e.message = result.raw_text;
    e.origin = ToolOrigin{tool.server, sig->tool};
    throw e;
  }
  return parse_literal(result.raw_text).with_origin(tool.server, sig->tool);
}

inline Value Evaluator::eval_comprehension(const script::ComprehensionExpr& comp) {
  std::vector<Value> items = iter_values(eval(*comp.iterable));
  // Comprehension variables do not leak (save and restore shadowed names).
  auto& globals = session_.globals();
  std::map<std::string, std::optional<Value>> saved;
  for (const std::string& t : comp.targets) {
    auto it = globals.find(t);
    saved[t] = it == globals.end() ? std::nullopt : std::make_optional(it->second);
  }
  ValueList list_out;
  ValueMap map_out;
  for (Value& item : items) {
    step();
    bind_targets(comp.targets, item);
    if (comp.condition && !eval(*comp.condition).truthy()) continue;
    if (comp.is_map) {
      Value key = eval(*comp.element);
      check_map_key(key);
      map_set(map_out, key, eval(*comp.map_value));
    } else {
      list_out.push_back(eval(*comp.element));
    }
  }
  for (auto& [name, value] : saved) {
    if (value) globals[name] = std::move(*value);
    else globals.erase(name);
  }
  return comp.is_map ? Value::map(std::move(map_out)) : Value::list(std::move(list_out));
}

inline Value Evaluator::eval_slice(const Value& obj, const script::SliceBounds& bounds) {
  auto get_int = [this](const script::ExprPtr& e, std::optional<std::int64_t> fallback) {
    if (!e) return fallback;
    Value v = eval(*e);
    if (v.is_none()) return fallback;
    if (!v.is_int()) runtime_error("slice indices must be integers");
    return std::make_optional(v.as_int());
  };
  const std::optional<std::int64_t> start = get_int(bounds.start, std::nullopt);
  const std::optional<std::int64_t> stop = get_int(bounds.stop, std::nullopt);
  const std::int64_t step_v = get_int(bounds.step, std::nullopt).value_or(1);
  if (step_v == 0) runtime_error("slice step cannot be zero");

  auto slice_indices = [&](std::int64_t n, std::vector<std::int64_t>& idx) {
    std::int64_t lo, hi;
    if (step_v > 0) {
      lo = start.value_or(0);
      hi = stop.value_or(n);
    } else {
      lo = start.value_or(n - 1);
      hi = stop.value_or(-n - 1);
    }
    auto norm = [&](std::int64_t i, bool is_stop_neg) {
      if (i < 0) i += n;
      if (step_v > 0) return std::clamp<std::int64_t>(i, 0, n);
      return std::clamp<std::int64_t>(i, is_stop_neg ? -1 : -1, n - 1);
    };
    if (step_v > 0) {
      lo = std::clamp<std::int64_t>(lo < 0 ? lo + n : lo, 0, n);
      hi = std::clamp<std::int64_t>(hi < 0 ? hi + n : hi, 0, n);
      for (std::int64_t i = lo; i < hi; i += step_v) idx.push_back(i);
    } else {
      lo = norm(lo, false);
      std::int64_t stop_i = stop ? (stop.value() < 0 ? stop.value() + n : stop.value()) : -1;
      if (stop_i < -1) stop_i = -1;
      if (stop_i > n - 1) stop_i = n - 1;
      if (!stop) stop_i = -1;
      for (std::int64_t i = lo; i > stop_i; i += step_v)
        if (i >= 0 && i < n) idx.push_back(i);
    }
  };

  if (obj.is_list() || obj.is_tuple()) {
    const ValueList& items = obj.is_list() ? obj.as_list() : obj.as_tuple();
    std::vector<std::int64_t> idx;
    slice_indices(static_cast<std::int64_t>(items.size()), idx);
    ValueList out;
    for (std::int64_t i : idx) out.push_back(items[static_cast<std::size_t>(i)]);
    return obj.is_list() ? Value::list(std::move(out)) : Value::tuple(std::move(out));
  }
  if (obj.is_str()) {
    const std::string& s = obj.as_str();
    std::vector<std::int64_t> idx;
    slice_indices(static_cast<std::int64_t>(s.size()), idx);
    std::string out;
    for (std::int64_t i : idx) out += s[static_cast<std::size_t>(i)];
    return Value::str(std::move(out));
  }
  runtime_error(std::string("'") + obj.kind_name() + "' object is not sliceable");
}

inline Value Evaluator::subscript_get(const Value& obj, const Value& index) {
  if (obj.is_list() || obj.is_tuple()) {
    const ValueList& items = obj.is_list() ? obj.as_list() : obj.as_tuple();
    if (!index.is_int() && !index.is_bool())
      access_error(obj, std::string(obj.kind_name()) + " indices must be integers, not " +
                            index.kind_name());
    std::int64_t i = index.is_bool() ? (index.as_bool() ? 1 : 0) : index.as_int();
    if (i < 0) i += static_cast<std::int64_t>(items.size());
    if (i < 0 || i >= static_cast<std::int64_t>(items.size()))
      access_error(obj, std::string(obj.kind_name()) + " index out of range");
    return items[static_cast<std::size_t>(i)];
  }
  if (obj.is_str()) {
    const std::string& s = obj.as_str();
    if (index.is_str())
      access_error(obj, "string indices must be integers, not str",
                   "You have tried to access a str as a dict, please check the output logs or "
                   "use get_tools_info([...]) to see the output format.");
    if (!index.is_int() && !index.is_bool())
      access_error(obj, "string indices must be integers");
    std::int64_t i = index.is_bool() ? (index.as_bool() ? 1 : 0) : index.as_int();
    if (i < 0) i += static_cast<std::int64_t>(s.size());
    if (i < 0 || i >= static_cast<std::int64_t>(s.size()))
      access_error(obj, "string index out of range");
    return Value::str(std::string(1, s[static_cast<std::size_t>(i)]));
  }
  if (obj.is_map()) {
    check_map_key(index);
    for (const auto& [k, v] : obj.as_map())
      if (k.equals(index)) return v;
    access_error(obj, "KeyError: " + render(index));
  }
  access_error(obj, std::string("'") + obj.kind_name() + "' object is not subscriptable");
}

inline Value Evaluator::binary_op(script::BinOp op, Value a, Value b) {
  using script::BinOp;
  auto as_num = [](const Value& v, double& out) {
    if (v.is_int()) {
      out = static_cast<double>(v.as_int());
      return true;
    }
    if (v.is_float()) {
      out = v.as_float();
      return true;
    }
    if (v.is_bool()) {
      out = v.as_bool() ? 1.0 : 0.0;
      return true;
    }
    return false;
  };
  auto int_like = [](const Value& v) { return v.is_int() || v.is_bool(); };
  auto to_int = [](const Value& v) { return v.is_bool() ? (v.as_bool() ? 1 : 0) : v.as_int(); };
  const char* op_text = op == BinOp::Add        ? "+"
                        : op == BinOp::Sub      ? "-"
                        : op == BinOp::Mul      ? "*"
                        : op == BinOp::Div      ? "/"
                        : op == BinOp::FloorDiv ? "//"
                        : op == BinOp::Mod      ? "%"
                                                : "**";

  if (op == BinOp::Add) {
    if (a.is_str() && b.is_str()) return Value::str(a.as_str() + b.as_str());
    if (a.is_list() && b.is_list()) {
      ValueList out = a.as_list();
      for (const Value& v : b.as_list()) out.push_back(v);
      return Value::list(std::move(out));
    }
    if (a.is_tuple() && b.is_tuple()) {
      ValueList out = a.as_tuple();
      for (const Value& v : b.as_tuple()) out.push_back(v);
      return Value::tuple(std::move(out));
    }
  }
  if (op == BinOp::Mul) {
    auto repeat_str = [](const std::string& s, std::int64_t n) {
      std::string out;
      for (std::int64_t i = 0; i < n; ++i) out += s;
      return out;
    };
    if (a.is_str() && int_like(b)) return Value::str(repeat_str(a.as_str(), to_int(b)));
    if (b.is_str() && int_like(a)) return Value::str(repeat_str(b.as_str(), to_int(a)));
    if (a.is_list() && int_like(b)) {
      ValueList out;
      for (std::int64_t i = 0; i < to_int(b); ++i)
        for (const Value& v : a.as_list()) out.push_back(v);
      return Value::list(std::move(out));
    }
  }

  double da, db;
  if (!as_num(a, da) || !as_num(b, db))
    runtime_error(std::string("unsupported operand type(s) for ") + op_text + ": '" + a.kind_name() +
                  "' and '" + b.kind_name() + "'");

  const bool both_int = int_like(a) && int_like(b);
  switch (op) {
    case BinOp::Add:
      return both_int ? Value::integer(to_int(a) + to_int(b)) : Value::real(da + db);
    case BinOp::Sub:
      return both_int ? Value::integer(to_int(a) - to_int(b)) : Value::real(da - db);
    case BinOp::Mul:
      return both_int ? Value::integer(to_int(a) * to_int(b)) : Value::real(da * db);
    case BinOp::Div:
      if (db == 0.0) runtime_error("division by zero");
      return Value::real(da / db);
    case BinOp::FloorDiv: {
      if (db == 0.0) runtime_error("integer division or modulo by zero");
      if (both_int) {
        std::int64_t ia = to_int(a), ib = to_int(b);
        std::int64_t q = ia / ib;
        if ((ia % ib != 0) && ((ia < 0) != (ib < 0))) --q;
        return Value::integer(q);
      }
      return Value::real(std::floor(da / db));
    }
    case BinOp::Mod: {
      if (db == 0.0) runtime_error("integer division or modulo by zero");
      if (both_int) {
        std::int64_t ia = to_int(a), ib = to_int(b);
        std::int64_t r = ia % ib;
        if (r != 0 && ((r < 0) != (ib < 0))) r += ib;
        return Value::integer(r);
      }
      double r = std::fmod(da, db);
      if (r != 0.0 && ((r < 0) != (db < 0))) r += db;
      return Value::real(r);
    }
    case BinOp::Pow: {
      if (both_int && to_int(b) >= 0) {
        std::int64_t base = to_int(a), exp = to_int(b), result = 1;
        bool overflow = false;
        for (std::int64_t i = 0; i < exp; ++i) {
          if (__builtin_mul_overflow(result, base, &result)) {
            overflow = true;
            break;
          }
        }
        if (!overflow) return Value::integer(result);
      }
      return Value::real(std::pow(da, db));
    }
  }
  runtime_error("internal: unhandled operator");
}

inline bool Evaluator::less_than(const Value& a, const Value& b) {
  if (a.is_number() && b.is_number()) {
    if (a.is_int() && b.is_int()) return a.as_int() < b.as_int();
    return a.as_number() < b.as_number();
  }
  if (a.is_str() && b.is_str()) return a.as_str() < b.as_str();
  if ((a.is_list() && b.is_list()) || (a.is_tuple() && b.is_tuple())) {
    const ValueList& xs = a.is_list() ? a.as_list() : a.as_tuple();
    const ValueList& ys = b.is_list() ? b.as_list() : b.as_tuple();
    for (std::size_t i = 0; i < std::min(xs.size(), ys.size()); ++i) {
      if (less_than(xs[i], ys[i])) return true;
      if (less_than(ys[i], xs[i])) return false;
    }
    return xs.size() < ys.size();
  }
  runtime_error(std::string("'<' not supported between instances of '") + a.kind_name() + "' and '" +
                b.kind_name() + "'");
}

inline Value Evaluator::compare(script::CmpOp op, const Value& a, const Value& b) {
  using script::CmpOp;
  switch (op) {
    case CmpOp::Eq: return Value::boolean(a.equals(b));
    case CmpOp::Ne: return Value::boolean(!a.equals(b));
    case CmpOp::Lt: return Value::boolean(less_than(a, b));
    case CmpOp::Gt: return Value::boolean(less_than(b, a));
    case CmpOp::Le: return Value::boolean(!less_than(b, a));
    case CmpOp::Ge: return Value::boolean(!less_than(a, b));
    case CmpOp::In:
    case CmpOp::NotIn: {
      bool found = false;
      if (b.is_list() || b.is_tuple()) {
        const ValueList& items = b.is_list() ? b.as_list() : b.as_tuple();
        for (const Value& item : items)
          if (item.equals(a)) found = true;
      } else if (b.is_map()) {
        for (const auto& [k, v] : b.as_map())
          if (k.equals(a)) found = true;
      } else if (b.is_str()) {
        if (!a.is_str()) runtime_error("'in <string>' requires string as left operand");
        found = b.as_str().find(a.as_str()) != std::string::npos;
      } else {
        runtime_error(std::string("argument of type '") + b.kind_name() + "' is not iterable");
      }
      return Value::boolean(op == CmpOp::In ? found : !found);
    }
  }
  runtime_error("internal: unhandled comparison");
}

inline Value Evaluator::call_builtin(const std::string& name, std::vector<Value>& args) {
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi)
      argument_error("builtin '" + name + "' called with " + std::to_string(args.size()) +
                     " arguments");
  };
  auto numeric = [&](const Value& v) -> double {
    if (v.is_int()) return static_cast<double>(v.as_int());
    if (v.is_float()) return v.as_float();
    if (v.is_bool()) return v.as_bool() ? 1 : 0;
    argument_error("builtin '" + name + "' expects a number, got " + std::string(v.kind_name()));
  };

  if (name == "len") {
    need(1, 1);
    const Value& v = args[0];
    if (v.is_str()) return Value::integer(static_cast<std::int64_t>(v.as_str().size()));
    if (v.is_list()) return Value::integer(static_cast<std::int64_t>(v.as_list().size()));
    if (v.is_tuple()) return Value::integer(static_cast<std::int64_t>(v.as_tuple().size()));
    if (v.is_map()) return Value::integer(static_cast<std::int64_t>(v.as_map().size()));
    argument_error(std::string("object of type '") + v.kind_name() + "' has no len()");
  }
  if (name == "sum") {
    need(1, 1);
    bool all_int = true;
    double total = 0;
    std::int64_t itotal = 0;
    for (const Value& v : iter_values(args[0])) {
      total += numeric(v);
      if (v.is_int() || v.is_bool())
        itotal += v.is_bool() ? (v.as_bool() ? 1 : 0) : v.as_int();
      else
        all_int = false;
    }
    return all_int ? Value::integer(itotal) : Value::real(total);
  }
  if (name == "min" || name == "max") {
    std::vector<Value> items = args.size() == 1 ? iter_values(args[0]) : args;
    if (items.empty()) argument_error(name + "() arg is an empty sequence");
    Value best = items[0];
    for (std::size_t i = 1; i < items.size(); ++i) {
      const bool take_it = name == "min" ? less_than(items[i], best) : less_than(best, items[i]);
      if (take_it) best = items[i];
    }
    return best;
  }
  if (name == "abs") {
    need(1, 1);
    if (args[0].is_int()) return Value::integer(std::llabs(args[0].as_int()));
    return Value::real(std::fabs(numeric(args[0])));
  }
  if (name == "round") {
    need(1, 2);
    const double x = numeric(args[0]);
    if (args.size() == 2) {
      if (!args[1].is_int()) argument_error("round() second argument must be an integer");
      const std::int64_t ndigits = args[1].as_int();
      if (ndigits > 0 && ndigits <= 17 && std::isfinite(x)) {
        // Round on the decimal expansion of the true binary value, like
        // Python does (round(2.675, 2) == 2.67).
        char buf[512];
        std::snprintf(buf, sizeof(buf), "%.*f", static_cast<int>(ndigits), x);
        return Value::real(std::stod(buf));
      }
      const double scale = std::pow(10.0, static_cast<double>(ndigits));
      return Value::real(std::nearbyint(x * scale) / scale);
    }
    return Value::integer(static_cast<std::int64_t>(std::nearbyint(x)));  // banker's rounding
  }
  if (name == "sorted") {
    need(1, 1);
    std::vector<Value> items = iter_values(args[0]);
    std::stable_sort(items.begin(), items.end(),
                     [this](const Value& a, const Value& b) { return less_than(a, b); });
    return Value::list(std::move(items));
  }
  if (name == "range") {
    need(1, 3);
    for (const Value& v : args)
      if (!v.is_int()) argument_error("range() expects integer arguments");
    std::int64_t start = 0, stop = 0, step_v = 1;
    if (args.size() == 1) stop = args[0].as_int();
    else {
      start = args[0].as_int();
      stop = args[1].as_int();
      if (args.size() == 3) step_v = args[2].as_int();
    }
    if (step_v == 0) argument_error("range() step must not be zero");
    ValueList out;
    std::int64_t count = 0;
    if (step_v > 0 && stop > start) count = (stop - start + step_v - 1) / step_v;
    if (step_v < 0 && stop < start) count = (start - stop - step_v - 1) / (-step_v);
    charge_steps(static_cast<std::size_t>(count));
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = start; step_v > 0 ? i < stop : i > stop; i += step_v)
      out.push_back(Value::integer(i));
    return Value::list(std::move(out));
  }
  if (name == "int") {
    need(1, 1);
    const Value& v = args[0];
    if (v.is_int()) return v;
    if (v.is_bool()) return Value::integer(v.as_bool() ? 1 : 0);
    if (v.is_float()) return Value::integer(static_cast<std::int64_t>(v.as_float()));
    if (v.is_str()) {
      std::string s = v.as_str();
      // trim whitespace
      const auto b = s.find_first_not_of(" \t\n\r");
      const auto e = s.find_last_not_of(" \t\n\r");
      if (b == std::string::npos) argument_error("invalid literal for int(): " + quote_string(s));
      s = s.substr(b, e - b + 1);
      try {
        std::size_t used = 0;
        std::int64_t parsed = std::stoll(s, &used);
        if (used != s.size()) argument_error("invalid literal for int(): " + quote_string(v.as_str()));
        return Value::integer(parsed);
      } catch (const HintedError&) {
        throw;
      } catch (...) {
        argument_error("invalid literal for int(): " + quote_string(v.as_str()));
      }
    }
    argument_error(std::string("int() argument must be a string or a number, not '") +
                   v.kind_name() + "'");
  }
  if (name == "float") {
    need(1, 1);
    const Value& v = args[0];
    if (v.is_float()) return v;
    if (v.is_int()) return Value::real(static_cast<double>(v.as_int()));
    if (v.is_bool()) return Value::real(v.as_bool() ? 1.0 : 0.0);
    if (v.is_str()) {
      try {
        std::size_t used = 0;
        std::string s = v.as_str();
        const auto b = s.find_first_not_of(" \t\n\r");
        const auto e = s.find_last_not_of(" \t\n\r");
        if (b == std::string::npos) argument_error("could not convert string to float: " + quote_string(s));
        s = s.substr(b, e - b + 1);
        double parsed = std::stod(s, &used);
        if (used != s.size())
          argument_error("could not convert string to float: " + quote_string(v.as_str()));
        return Value::real(parsed);
      } catch (const HintedError&) {
        throw;
      } catch (...) {
        argument_error("could not convert string to float: " + quote_string(v.as_str()));
      }
    }
    argument_error(std::string("float() argument must be a string or a number, not '") +
                   v.kind_name() + "'");
  }
  if (name == "str") {
    need(1, 1);
    return Value::str(args[0].is_str() ? args[0].as_str() : render(args[0]));
  }
  if (name == "bool") {
    need(1, 1);
    return Value::boolean(args[0].truthy());
  }
  if (name == "list") {
    need(0, 1);
    if (args.empty()) return Value::list({});
    return Value::list(iter_values(args[0]));
  }
  if (name == "dict") {
    need(0, 1);
    if (args.empty()) return Value::map({});
    const Value& v = args[0];
    if (v.is_map()) {
      ValueMap copy = v.as_map();
      return Value::map(std::move(copy));
    }
    if (v.is_list() || v.is_tuple()) {
      ValueMap entries;
      for (const Value& pair : (v.is_list() ? v.as_list() : v.as_tuple())) {
        const ValueList* kv = nullptr;
        if (pair.is_tuple()) kv = &pair.as_tuple();
        else if (pair.is_list()) kv = &pair.as_list();
        if (!kv || kv->size() != 2)
          argument_error("dict() expects a sequence of (key, value) pairs");
        check_map_key((*kv)[0]);
        map_set(entries, (*kv)[0], (*kv)[1]);
      }
      return Value::map(std::move(entries));
    }
    argument_error(std::string("dict() argument must be a mapping or pair sequence, not '") +
                   v.kind_name() + "'");
  }
  if (name == "enumerate") {
    need(1, 2);
    std::int64_t start = 0;
    if (args.size() == 2) {
      if (!args[1].is_int()) argument_error("enumerate() start must be an integer");
      start = args[1].as_int();
    }
    ValueList out;
    for (Value& v : iter_values(args[0])) {
      out.push_back(Value::tuple({Value::integer(start++), std::move(v)}));
    }
    return Value::list(std::move(out));
  }
  if (name == "zip") {
    std::vector<std::vector<Value>> columns;
    std::size_t shortest = args.empty() ? 0 : SIZE_MAX;
    for (const Value& v : args) {
      columns.push_back(iter_values(v));
      shortest = std::min(shortest, columns.back().size());
    }
    ValueList out;
    for (std::size_t i = 0; i < shortest; ++i) {
      ValueList row;
      for (auto& col : columns) row.push_back(col[i]);
      out.push_back(Value::tuple(std::move(row)));
    }
    return Value::list(std::move(out));
  }
  runtime_error("name '" + name + "' is not defined");
}

inline Value Evaluator::call_method(Value& object, const std::string& name,
                                    std::vector<Value>& args) {
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi)
      argument_error("method '" + name + "' called with " + std::to_string(args.size()) +
                     " arguments");
  };
  auto str_arg = [&](std::size_t i) -> const std::string& {
    if (!args[i].is_str()) argument_error("method '" + name + "' expects string arguments");
    return args[i].as_str();
  };

  if (object.is_str()) {
    const std::string& s = object.as_str();
    if (name == "split") {
      need(0, 1);
      ValueList parts;
      if (args.empty()) {
        std::size_t i = 0;
        while (i < s.size()) {
          while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
          std::size_t j = i;
          while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
          if (j > i) parts.push_back(Value::str(s.substr(i, j - i)));
          i = j;
        }
      } else {
        const std::string& sep = str_arg(0);
        if (sep.empty()) argument_error("empty separator");
        std::size_t start = 0;
        while (true) {
          std::size_t pos = s.find(sep, start);
          if (pos == std::string::npos) {
            parts.push_back(Value::str(s.substr(start)));
            break;
          }
          parts.push_back(Value::str(s.substr(start, pos - start)));
          start = pos + sep.size();
        }
      }
      return Value::list(std::move(parts));
    }
    if (name == "strip") {
      need(0, 1);
      const std::string chars = args.empty() ? " \t\n\r" : str_arg(0);
      std::size_t b = s.find_first_not_of(chars);
      if (b == std::string::npos) return Value::str("");
      std::size_t e = s.find_last_not_of(chars);
      return Value::str(s.substr(b, e - b + 1));
    }
    if (name == "lower" || name == "upper") {
      need(0, 0);
      std::string out = s;
      for (char& c : out)
        c = name == "lower" ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                            : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      return Value::str(std::move(out));
    }
    if (name == "replace") {
      need(2, 2);
      const std::string& from = str_arg(0);
      const std::string& to = str_arg(1);
      if (from.empty()) return Value::str(s);
      std::string out;
      std::size_t start = 0;
      while (true) {
        std::size_t pos = s.find(from, start);
        if (pos == std::string::npos) {
          out += s.substr(start);
          break;
        }
        out += s.substr(start, pos - start);
        out += to;
        start = pos + from.size();
      }
      return Value::str(std::move(out));
    }
    if (name == "startswith") {
      need(1, 1);
      return Value::boolean(s.rfind(str_arg(0), 0) == 0);
    }
    if (name == "endswith") {
      need(1, 1);
      const std::string& suffix = str_arg(0);
      return Value::boolean(suffix.size() <= s.size() &&
                            s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0);
    }
    if (name == "find") {
      need(1, 1);
      std::size_t pos = s.find(str_arg(0));
      return Value::integer(pos == std::string::npos ? -1 : static_cast<std::int64_t>(pos));
    }
    if (name == "join") {
      need(1, 1);
      std::string out;
      bool first = true;
      for (const Value& v : iter_values(args[0])) {
        if (!v.is_str()) argument_error("join() expects an iterable of strings");
        if (!first) out += s;
        out += v.as_str();
        first = false;
      }
      return Value::str(std::move(out));
    }
    if (name == "count") {
      need(1, 1);
      const std::string& sub = str_arg(0);
      if (sub.empty()) return Value::integer(static_cast<std::int64_t>(s.size() + 1));
      std::int64_t count = 0;
      std::size_t pos = 0;
      while ((pos = s.find(sub, pos)) != std::string::npos) {
        ++count;
        pos += sub.size();
      }
      return Value::integer(count);
    }
  }

  if (object.is_list()) {
    ValueList& items = object.as_list();
    if (name == "append") {
      need(1, 1);
      items.push_back(args[0]);
      return Value::none();
    }
    if (name == "extend") {
      need(1, 1);
      for (Value& v : iter_values(args[0])) items.push_back(std::move(v));
      return Value::none();
    }
    if (name == "index") {
      need(1, 1);
      for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].equals(args[0])) return Value::integer(static_cast<std::int64_t>(i));
      runtime_error(render(args[0]) + " is not in list");
    }
    if (name == "count") {
      need(1, 1);
      std::int64_t count = 0;
      for (const Value& v : items)
        if (v.equals(args[0])) ++count;
      return Value::integer(count);
    }
  }

  if (object.is_tuple()) {
    const ValueList& items = object.as_tuple();
    if (name == "index") {
      need(1, 1);
      for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].equals(args[0])) return Value::integer(static_cast<std::int64_t>(i));
      runtime_error(render(args[0]) + " is not in tuple");
    }
    if (name == "count") {
      need(1, 1);
      std::int64_t count = 0;
      for (const Value& v : items)
        if (v.equals(args[0])) ++count;
      return Value::integer(count);
    }
  }

  if (object.is_map()) {
    ValueMap& entries = object.as_map();
    if (name == "items") {
      need(0, 0);
      ValueList out;
      for (const auto& [k, v] : entries) out.push_back(Value::tuple({k, v}));
      return Value::list(std::move(out));
    }
    if (name == "keys") {
      need(0, 0);
      ValueList out;
      for (const auto& [k, v] : entries) out.push_back(k);
      return Value::list(std::move(out));
    }
    if (name == "values") {
      need(0, 0);
      ValueList out;
      for (const auto& [k, v] : entries) out.push_back(v);
      return Value::list(std::move(out));
    }
    if (name == "get") {
      need(1, 2);
      for (const auto& [k, v] : entries)
        if (k.equals(args[0])) return v;
      return args.size() == 2 ? args[1] : Value::none();
    }
  }

  runtime_error(std::string("'") + object.kind_name() + "' object has no attribute '" + name + "'");
}

}  // namespace script::detail

}  // namespace toolscope
