#pragma once

#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "toolscope/value.hpp"

namespace toolscope::script {

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

enum class BinOp { Add, Sub, Mul, Div, FloorDiv, Mod, Pow };
enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge, In, NotIn };

struct LiteralExpr {
  Value value;
};
struct NameExpr {
  std::string id;
};
struct ListExpr {
  std::vector<ExprPtr> items;
};
struct TupleExpr {
  std::vector<ExprPtr> items;
};
struct MapExpr {
  std::vector<std::pair<ExprPtr, ExprPtr>> items;
};
struct UnaryExpr {
  char op;  // '-' or '+'
  ExprPtr operand;
};
struct NotExpr {
  ExprPtr operand;
};
struct BinaryExpr {
  BinOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct BoolExpr {
  bool is_and;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct CompareExpr {
  CmpOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct TernaryExpr {
  ExprPtr condition;
  ExprPtr then_value;
  ExprPtr else_value;
};
struct CallExpr {
  ExprPtr callee;
  std::vector<ExprPtr> args;
  std::vector<std::pair<std::string, ExprPtr>> kwargs;
};
struct AttributeExpr {
  ExprPtr object;
  std::string name;
};
struct SliceBounds {
  ExprPtr start;  // any may be null
  ExprPtr stop;
  ExprPtr step;
};
struct SubscriptExpr {
  ExprPtr object;
  ExprPtr index;                      // null when slicing
  std::unique_ptr<SliceBounds> slice; // null when plain indexing
};
struct ComprehensionExpr {
  bool is_map = false;
  ExprPtr element;    // list element, or map key when is_map
  ExprPtr map_value;  // map comprehension value
  std::vector<std::string> targets;
  ExprPtr iterable;
  ExprPtr condition;  // optional
};

struct Expr {
  int line = 0;
  int col = 0;
  std::variant<LiteralExpr, NameExpr, ListExpr, TupleExpr, MapExpr, UnaryExpr, NotExpr, BinaryExpr,
               BoolExpr, CompareExpr, TernaryExpr, CallExpr, AttributeExpr, SubscriptExpr,
               ComprehensionExpr>
      node;
};

struct Stmt;
using Block = std::vector<Stmt>;

struct AssignStmt {
  ExprPtr target;  // NameExpr or SubscriptExpr
  ExprPtr value;
};
struct ExprStmt {
  ExprPtr expr;
};
struct IfStmt {
  std::vector<std::pair<ExprPtr, Block>> branches;  // if / elif chain
  Block else_body;
};
struct ForStmt {
  std::vector<std::string> targets;
  ExprPtr iterable;
  Block body;
};
struct WhileStmt {
  ExprPtr condition;
  Block body;
};
struct ImportStmt {
  bool binds_mcpserver = false;
  std::string module;
  std::vector<std::string> names;  // from-import names
};
struct PassStmt {};

struct Stmt {
  int line = 0;
  int col = 0;
  std::variant<AssignStmt, ExprStmt, IfStmt, ForStmt, WhileStmt, ImportStmt, PassStmt> node;
};

}  // namespace toolscope::script
