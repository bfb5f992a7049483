#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "toolscope/script/ast.hpp"
#include "toolscope/script/lexer.hpp"

namespace toolscope::script {

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  Block parse_cell() {
    Block block = parse_statements();
    expect(Tok::End, "a statement");
    return block;
  }

 private:
  const Token& cur() const { return tokens_[pos_]; }
  const Token& ahead(std::size_t n = 1) const {
    return tokens_[pos_ + n < tokens_.size() ? pos_ + n : tokens_.size() - 1];
  }
  bool at(Tok kind) const { return cur().kind == kind; }
  Token take() { return tokens_[pos_++]; }
  bool accept(Tok kind) {
    if (!at(kind)) return false;
    ++pos_;
    return true;
  }
  [[noreturn]] void fail(const std::string& expected) const {
    throw SyntaxError{cur().line, cur().col,
                      "expected " + expected + ", got " + tok_name(cur().kind)};
  }
  Token expect(Tok kind, const std::string& expected) {
    if (!at(kind)) fail(expected);
    return take();
  }

  template <typename Node>
  ExprPtr make_expr(const Token& t, Node node) {
    auto e = std::make_unique<Expr>();
    e->line = t.line;
    e->col = t.col;
    e->node = std::move(node);
    return e;
  }

  // --- statements ---------------------------------------------------------

  Block parse_statements() {
    Block block;
    while (true) {
      while (accept(Tok::Newline)) {
      }
      if (at(Tok::End) || at(Tok::Dedent)) break;
      parse_statement(block);
    }
    return block;
  }

  void parse_statement(Block& block) {
    if (at(Tok::KwIf)) {
      block.push_back(parse_if());
      return;
    }
    if (at(Tok::KwFor)) {
      block.push_back(parse_for());
      return;
    }
    if (at(Tok::KwWhile)) {
      block.push_back(parse_while());
      return;
    }
    parse_simple_line(block);
  }

  void parse_simple_line(Block& block) {
    block.push_back(parse_simple_stmt());
    while (accept(Tok::Semicolon)) {
      if (at(Tok::Newline) || at(Tok::End)) break;  // trailing semicolon
      block.push_back(parse_simple_stmt());
    }
    if (!at(Tok::End)) expect(Tok::Newline, "end of statement");
  }

  Stmt parse_simple_stmt() {
    const Token& t = cur();
    Stmt stmt;
    stmt.line = t.line;
    stmt.col = t.col;
    if (at(Tok::KwPass)) {
      take();
      stmt.node = PassStmt{};
      return stmt;
    }
    if (at(Tok::KwImport) || at(Tok::KwFrom)) {
      stmt.node = parse_import();
      return stmt;
    }
    ExprPtr first = parse_expr();
    if (accept(Tok::Assign)) {
      if (!std::holds_alternative<NameExpr>(first->node) &&
          !std::holds_alternative<SubscriptExpr>(first->node)) {
        throw SyntaxError{stmt.line, stmt.col,
                          "assignment target must be a name or a subscript"};
      }
      AssignStmt assign;
      assign.target = std::move(first);
      assign.value = parse_expr();
      stmt.node = std::move(assign);
      return stmt;
    }
    ExprStmt es;
    es.expr = std::move(first);
    stmt.node = std::move(es);
    return stmt;
  }

  ImportStmt parse_import() {
    ImportStmt imp;
    if (accept(Tok::KwImport)) {
      imp.module = expect(Tok::Name, "a module name").text;
      while (accept(Tok::Dot)) imp.module += "." + expect(Tok::Name, "a module name").text;
      if (accept(Tok::KwAs)) expect(Tok::Name, "an alias name");
      return imp;  // plain imports are a no-op with a warning
    }
    expect(Tok::KwFrom, "'from' or 'import'");
    imp.module = expect(Tok::Name, "a module name").text;
    while (accept(Tok::Dot)) imp.module += "." + expect(Tok::Name, "a module name").text;
    expect(Tok::KwImport, "'import'");
    imp.names.push_back(expect(Tok::Name, "an imported name").text);
    while (accept(Tok::Comma)) imp.names.push_back(expect(Tok::Name, "an imported name").text);
    for (const std::string& name : imp.names)
      if (name == "MCPServer") imp.binds_mcpserver = true;
    return imp;
  }

  Block parse_suite() {
    expect(Tok::Colon, "':'");
    if (accept(Tok::Newline)) {
      expect(Tok::Indent, "an indented block");
      Block body = parse_statements();
      if (body.empty()) fail("at least one statement in the block");
      expect(Tok::Dedent, "a dedent");
      return body;
    }
    // inline suite: `if x: y = 1`
    Block body;
    parse_simple_line(body);
    return body;
  }

  Stmt parse_if() {
    Stmt stmt;
    stmt.line = cur().line;
    stmt.col = cur().col;
    IfStmt node;
    expect(Tok::KwIf, "'if'");
    ExprPtr cond = parse_expr();
    Block body = parse_suite();
    node.branches.emplace_back(std::move(cond), std::move(body));
    while (true) {
      while (accept(Tok::Newline)) {
      }
      if (at(Tok::KwElif)) {
        take();
        ExprPtr c = parse_expr();
        Block b = parse_suite();
        node.branches.emplace_back(std::move(c), std::move(b));
        continue;
      }
      if (at(Tok::KwElse)) {
        take();
        node.else_body = parse_suite();
      }
      break;
    }
    stmt.node = std::move(node);
    return stmt;
  }

  std::vector<std::string> parse_target_list() {
    std::vector<std::string> targets;
    targets.push_back(expect(Tok::Name, "a loop variable").text);
    while (accept(Tok::Comma)) targets.push_back(expect(Tok::Name, "a loop variable").text);
    return targets;
  }

  Stmt parse_for() {
    Stmt stmt;
    stmt.line = cur().line;
    stmt.col = cur().col;
    expect(Tok::KwFor, "'for'");
    ForStmt node;
    node.targets = parse_target_list();
    expect(Tok::KwIn, "'in'");
    node.iterable = parse_expr();
    node.body = parse_suite();
    stmt.node = std::move(node);
    return stmt;
  }

  Stmt parse_while() {
    Stmt stmt;
    stmt.line = cur().line;
    stmt.col = cur().col;
    expect(Tok::KwWhile, "'while'");
    WhileStmt node;
    node.condition = parse_expr();
    node.body = parse_suite();
    stmt.node = std::move(node);
    return stmt;
  }

  // --- expressions ---------------------------------------------------------

  ExprPtr parse_expr() { return parse_ternary(); }

  ExprPtr parse_ternary() {
    ExprPtr value = parse_or();
    if (!at(Tok::KwIf)) return value;
    const Token t = take();
    TernaryExpr node;
    node.then_value = std::move(value);
    node.condition = parse_or();
    expect(Tok::KwElse, "'else'");
    node.else_value = parse_ternary();
    return make_expr(t, std::move(node));
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (at(Tok::KwOr)) {
      const Token t = take();
      BoolExpr node;
      node.is_and = false;
      node.lhs = std::move(lhs);
      node.rhs = parse_and();
      lhs = make_expr(t, std::move(node));
    }
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_not();
    while (at(Tok::KwAnd)) {
      const Token t = take();
      BoolExpr node;
      node.is_and = true;
      node.lhs = std::move(lhs);
      node.rhs = parse_not();
      lhs = make_expr(t, std::move(node));
    }
    return lhs;
  }

  ExprPtr parse_not() {
    if (at(Tok::KwNot)) {
      const Token t = take();
      NotExpr node;
      node.operand = parse_not();
      return make_expr(t, std::move(node));
    }
    return parse_comparison();
  }

  ExprPtr parse_comparison() {
    ExprPtr lhs = parse_arith();
    CmpOp op;
    if (at(Tok::EqEq)) op = CmpOp::Eq;
    else if (at(Tok::NotEq)) op = CmpOp::Ne;
    else if (at(Tok::Lt)) op = CmpOp::Lt;
    else if (at(Tok::LtEq)) op = CmpOp::Le;
    else if (at(Tok::Gt)) op = CmpOp::Gt;
    else if (at(Tok::GtEq)) op = CmpOp::Ge;
    else if (at(Tok::KwIn)) op = CmpOp::In;
    else if (at(Tok::KwNot) && ahead().kind == Tok::KwIn) op = CmpOp::NotIn;
    else return lhs;
    const Token t = take();
    if (op == CmpOp::NotIn) take();  // consume 'in'
    CompareExpr node;
    node.op = op;
    node.lhs = std::move(lhs);
    node.rhs = parse_arith();
    return make_expr(t, std::move(node));
  }

  ExprPtr parse_arith() {
    ExprPtr lhs = parse_term();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      const Token t = take();
      BinaryExpr node;
      node.op = t.kind == Tok::Plus ? BinOp::Add : BinOp::Sub;
      node.lhs = std::move(lhs);
      node.rhs = parse_term();
      lhs = make_expr(t, std::move(node));
    }
    return lhs;
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_factor();
    while (at(Tok::Star) || at(Tok::Slash) || at(Tok::DoubleSlash) || at(Tok::Percent)) {
      const Token t = take();
      BinaryExpr node;
      node.op = t.kind == Tok::Star         ? BinOp::Mul
                : t.kind == Tok::Slash      ? BinOp::Div
                : t.kind == Tok::DoubleSlash ? BinOp::FloorDiv
                                             : BinOp::Mod;
      node.lhs = std::move(lhs);
      node.rhs = parse_factor();
      lhs = make_expr(t, std::move(node));
    }
    return lhs;
  }

  ExprPtr parse_factor() {
    if (at(Tok::Minus) || at(Tok::Plus)) {
      const Token t = take();
      UnaryExpr node;
      node.op = t.kind == Tok::Minus ? '-' : '+';
      node.operand = parse_factor();
      return make_expr(t, std::move(node));
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_postfix();
    if (at(Tok::DoubleStar)) {
      const Token t = take();
      BinaryExpr node;
      node.op = BinOp::Pow;
      node.lhs = std::move(base);
      node.rhs = parse_factor();  // right associative
      return make_expr(t, std::move(node));
    }
    return base;
  }

  ExprPtr parse_postfix() {
    ExprPtr expr = parse_atom();
    while (true) {
      if (at(Tok::LParen)) {
        const Token t = take();
        CallExpr node;
        node.callee = std::move(expr);
        parse_arglist(node);
        expect(Tok::RParen, "')'");
        expr = make_expr(t, std::move(node));
        continue;
      }
      if (at(Tok::LBracket)) {
        const Token t = take();
        expr = parse_subscript(t, std::move(expr));
        continue;
      }
      if (at(Tok::Dot)) {
        const Token t = take();
        AttributeExpr node;
        node.object = std::move(expr);
        node.name = expect(Tok::Name, "an attribute name").text;
        expr = make_expr(t, std::move(node));
        continue;
      }
      return expr;
    }
  }

  void parse_arglist(CallExpr& call) {
    if (at(Tok::RParen)) return;
    while (true) {
      if (at(Tok::Name) && ahead().kind == Tok::Assign) {
        std::string key = take().text;
        take();  // '='
        call.kwargs.emplace_back(std::move(key), parse_expr());
      } else {
        if (!call.kwargs.empty())
          fail("keyword arguments (positional arguments cannot follow keyword arguments)");
        call.args.push_back(parse_expr());
      }
      if (!accept(Tok::Comma)) break;
      if (at(Tok::RParen)) break;  // trailing comma
    }
  }

  ExprPtr parse_subscript(const Token& t, ExprPtr object) {
    SubscriptExpr node;
    node.object = std::move(object);
    ExprPtr start;
    bool is_slice = false;
    if (!at(Tok::Colon)) start = parse_expr();
    if (accept(Tok::Colon)) {
      is_slice = true;
      auto bounds = std::make_unique<SliceBounds>();
      bounds->start = std::move(start);
      if (!at(Tok::RBracket) && !at(Tok::Colon)) bounds->stop = parse_expr();
      if (accept(Tok::Colon)) {
        if (!at(Tok::RBracket)) bounds->step = parse_expr();
      }
      node.slice = std::move(bounds);
    } else {
      node.index = std::move(start);
    }
    if (!is_slice && !node.index) fail("an index expression");
    expect(Tok::RBracket, "']'");
    return make_expr(t, std::move(node));
  }

  std::vector<std::string> parse_comp_targets() {
    std::vector<std::string> targets;
    targets.push_back(expect(Tok::Name, "a comprehension variable").text);
    while (accept(Tok::Comma)) {
      if (at(Tok::KwIn)) break;
      targets.push_back(expect(Tok::Name, "a comprehension variable").text);
    }
    return targets;
  }

  ExprPtr parse_atom() {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::IntLit: {
        Token tok = take();
        return make_expr(tok, LiteralExpr{Value::integer(tok.int_value)});
      }
      case Tok::FloatLit: {
        Token tok = take();
        return make_expr(tok, LiteralExpr{Value::real(tok.float_value)});
      }
      case Tok::StrLit: {
        Token tok = take();
        return make_expr(tok, LiteralExpr{Value::str(tok.text)});
      }
      case Tok::KwTrue: {
        Token tok = take();
        return make_expr(tok, LiteralExpr{Value::boolean(true)});
      }
      case Tok::KwFalse: {
        Token tok = take();
        return make_expr(tok, LiteralExpr{Value::boolean(false)});
      }
      case Tok::KwNone: {
        Token tok = take();
        return make_expr(tok, LiteralExpr{Value::none()});
      }
      case Tok::Name: {
        Token tok = take();
        return make_expr(tok, NameExpr{tok.text});
      }
      case Tok::LParen: {
        Token tok = take();
        if (accept(Tok::RParen)) return make_expr(tok, TupleExpr{});
        ExprPtr first = parse_expr();
        if (at(Tok::Comma)) {
          TupleExpr node;
          node.items.push_back(std::move(first));
          while (accept(Tok::Comma)) {
            if (at(Tok::RParen)) break;
            node.items.push_back(parse_expr());
          }
          expect(Tok::RParen, "')'");
          return make_expr(tok, std::move(node));
        }
        expect(Tok::RParen, "')'");
        return first;  // parenthesised expression
      }
      case Tok::LBracket: {
        Token tok = take();
        if (accept(Tok::RBracket)) return make_expr(tok, ListExpr{});
        ExprPtr first = parse_expr();
        if (at(Tok::KwFor)) {
          take();
          ComprehensionExpr node;
          node.is_map = false;
          node.element = std::move(first);
          node.targets = parse_comp_targets();
          expect(Tok::KwIn, "'in'");
          node.iterable = parse_or();
          if (accept(Tok::KwIf)) node.condition = parse_or();
          expect(Tok::RBracket, "']'");
          return make_expr(tok, std::move(node));
        }
        ListExpr node;
        node.items.push_back(std::move(first));
        while (accept(Tok::Comma)) {
          if (at(Tok::RBracket)) break;
          node.items.push_back(parse_expr());
        }
        expect(Tok::RBracket, "']'");
        return make_expr(tok, std::move(node));
      }
      case Tok::LBrace: {
        Token tok = take();
        if (accept(Tok::RBrace)) return make_expr(tok, MapExpr{});
        ExprPtr key = parse_expr();
        if (at(Tok::Comma) || at(Tok::RBrace))
          throw SyntaxError{tok.line, tok.col, "set literals are not supported"};
        expect(Tok::Colon, "':'");
        ExprPtr value = parse_expr();
        if (at(Tok::KwFor)) {
          take();
          ComprehensionExpr node;
          node.is_map = true;
          node.element = std::move(key);
          node.map_value = std::move(value);
          node.targets = parse_comp_targets();
          expect(Tok::KwIn, "'in'");
          node.iterable = parse_or();
          if (accept(Tok::KwIf)) node.condition = parse_or();
          expect(Tok::RBrace, "'}'");
          return make_expr(tok, std::move(node));
        }
        MapExpr node;
        node.items.emplace_back(std::move(key), std::move(value));
        while (accept(Tok::Comma)) {
          if (at(Tok::RBrace)) break;
          ExprPtr k = parse_expr();
          expect(Tok::Colon, "':'");
          node.items.emplace_back(std::move(k), parse_expr());
        }
        expect(Tok::RBrace, "'}'");
        return make_expr(tok, std::move(node));
      }
      default:
        fail("an expression");
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

/// Parse one cell. Throws SyntaxError with line/column on any failure; a cell
/// either parses fully or is rejected as a whole.
inline Block parse(std::string_view source) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return parser.parse_cell();
}

}  // namespace toolscope::script
