#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace toolscope::script {

struct SyntaxError {
  int line = 0;
  int col = 0;
  std::string message;
};

enum class Tok {
  End,
  Newline,
  Indent,
  Dedent,
  Name,
  IntLit,
  FloatLit,
  StrLit,
  KwAnd,
  KwOr,
  KwNot,
  KwIf,
  KwElif,
  KwElse,
  KwFor,
  KwWhile,
  KwIn,
  KwTrue,
  KwFalse,
  KwNone,
  KwImport,
  KwFrom,
  KwAs,
  KwPass,
  Plus,
  Minus,
  Star,
  DoubleStar,
  Slash,
  DoubleSlash,
  Percent,
  Assign,
  EqEq,
  NotEq,
  Lt,
  LtEq,
  Gt,
  GtEq,
  LParen,
  RParen,
  LBracket,
  RBracket,
  LBrace,
  RBrace,
  Comma,
  Colon,
  Dot,
  Semicolon,
};

inline const char* tok_name(Tok t) {
  switch (t) {
    case Tok::End: return "end of input";
    case Tok::Newline: return "newline";
    case Tok::Indent: return "indent";
    case Tok::Dedent: return "dedent";
    case Tok::Name: return "identifier";
    case Tok::IntLit: return "integer literal";
    case Tok::FloatLit: return "float literal";
    case Tok::StrLit: return "string literal";
    case Tok::KwAnd: return "'and'";
    case Tok::KwOr: return "'or'";
    case Tok::KwNot: return "'not'";
    case Tok::KwIf: return "'if'";
    case Tok::KwElif: return "'elif'";
    case Tok::KwElse: return "'else'";
    case Tok::KwFor: return "'for'";
    case Tok::KwWhile: return "'while'";
    case Tok::KwIn: return "'in'";
    case Tok::KwTrue: return "'True'";
    case Tok::KwFalse: return "'False'";
    case Tok::KwNone: return "'None'";
    case Tok::KwImport: return "'import'";
    case Tok::KwFrom: return "'from'";
    case Tok::KwAs: return "'as'";
    case Tok::KwPass: return "'pass'";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::DoubleStar: return "'**'";
    case Tok::Slash: return "'/'";
    case Tok::DoubleSlash: return "'//'";
    case Tok::Percent: return "'%'";
    case Tok::Assign: return "'='";
    case Tok::EqEq: return "'=='";
    case Tok::NotEq: return "'!='";
    case Tok::Lt: return "'<'";
    case Tok::LtEq: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::GtEq: return "'>='";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Comma: return "','";
    case Tok::Colon: return "':'";
    case Tok::Dot: return "'.'";
    case Tok::Semicolon: return "';'";
  }
  return "?";
}

struct Token {
  Tok kind = Tok::End;
  std::string text;  // identifier, decoded string value, or raw number text
  std::int64_t int_value = 0;
  double float_value = 0.0;
  int line = 1;
  int col = 1;
};

/// Python-style lexer: indentation blocks, logical lines, implicit line
/// joining inside brackets, '#' comments.
class Lexer {
 public:
  explicit Lexer(std::string_view source) : src_(source) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    indents_.push_back(0);
    bool at_line_start = true;
    while (true) {
      if (at_line_start && depth_ == 0) {
        if (!handle_line_start(out)) break;  // end of input
        at_line_start = false;
        continue;
      }
      skip_spaces();
      if (eof()) break;
      char c = peek();
      if (c == '#') {
        while (!eof() && peek() != '\n') advance();
        continue;
      }
      if (c == '\n') {
        advance_line();
        if (depth_ == 0) {
          emit(out, Tok::Newline);
          at_line_start = true;
        }
        continue;
      }
      if (c == '\\' && i_ + 1 < src_.size() && src_[i_ + 1] == '\n') {
        advance();
        advance_line();
        continue;  // explicit line continuation
      }
      lex_token(out);
    }
    if (!out.empty() && out.back().kind != Tok::Newline) emit(out, Tok::Newline);
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(out, Tok::Dedent);
    }
    emit(out, Tok::End);
    return out;
  }

 private:
  bool eof() const { return i_ >= src_.size(); }
  char peek() const { return src_[i_]; }
  char peek2() const { return i_ + 1 < src_.size() ? src_[i_ + 1] : '\0'; }
  void advance() {
    ++i_;
    ++col_;
  }
  void advance_line() {
    ++i_;
    ++line_;
    col_ = 1;
  }
  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }
  void emit(std::vector<Token>& out, Tok kind, std::string text = "") {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.line = line_;
    t.col = col_;
    out.push_back(std::move(t));
  }
  [[noreturn]] void fail(const std::string& message) const {
    throw SyntaxError{line_, col_, message};
  }

  /// Measure indentation, skip blank/comment lines, emit INDENT/DEDENT.
  /// Returns false at end of input.
  bool handle_line_start(std::vector<Token>& out) {
    while (true) {
      if (eof()) return false;
      int indent = 0;
      std::size_t save = i_;
      int save_col = col_;
      while (!eof() && (peek() == ' ' || peek() == '\t')) {
        indent = peek() == '\t' ? (indent / 8 + 1) * 8 : indent + 1;
        advance();
      }
      if (eof()) return false;
      if (peek() == '\n') {
        advance_line();
        continue;  // blank line
      }
      if (peek() == '\r') {
        advance();
        continue;
      }
      if (peek() == '#') {
        while (!eof() && peek() != '\n') advance();
        continue;
      }
      (void)save;
      (void)save_col;
      if (indent > indents_.back()) {
        indents_.push_back(indent);
        emit(out, Tok::Indent);
      } else {
        while (indent < indents_.back()) {
          indents_.pop_back();
          emit(out, Tok::Dedent);
        }
        if (indent != indents_.back())
          fail("unindent does not match any outer indentation level");
      }
      return true;
    }
  }

  void lex_token(std::vector<Token>& out) {
    char c = peek();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      lex_name(out);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek2())))) {
      lex_number(out);
      return;
    }
    if (c == '\'' || c == '"') {
      lex_string(out);
      return;
    }
    lex_operator(out);
  }

  void lex_name(std::vector<Token>& out) {
    const int line = line_, col = col_;
    std::string name;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
      name += peek();
      advance();
    }
    Tok kind = Tok::Name;
    if (name == "and") kind = Tok::KwAnd;
    else if (name == "or") kind = Tok::KwOr;
    else if (name == "not") kind = Tok::KwNot;
    else if (name == "if") kind = Tok::KwIf;
    else if (name == "elif") kind = Tok::KwElif;
    else if (name == "else") kind = Tok::KwElse;
    else if (name == "for") kind = Tok::KwFor;
    else if (name == "while") kind = Tok::KwWhile;
    else if (name == "in") kind = Tok::KwIn;
    else if (name == "True") kind = Tok::KwTrue;
    else if (name == "False") kind = Tok::KwFalse;
    else if (name == "None") kind = Tok::KwNone;
    else if (name == "import") kind = Tok::KwImport;
    else if (name == "from") kind = Tok::KwFrom;
    else if (name == "as") kind = Tok::KwAs;
    else if (name == "pass") kind = Tok::KwPass;
    else if (name == "def" || name == "class" || name == "return" || name == "lambda" ||
             name == "try" || name == "except" || name == "finally" || name == "raise" ||
             name == "with" || name == "global" || name == "nonlocal" || name == "yield" ||
             name == "del" || name == "assert" || name == "break" || name == "continue" ||
             name == "is" || name == "async" || name == "await") {
      throw SyntaxError{line, col, "'" + name + "' is not supported in this language"};
    }
    Token t;
    t.kind = kind;
    t.text = std::move(name);
    t.line = line;
    t.col = col;
    out.push_back(std::move(t));
  }

  void lex_number(std::vector<Token>& out) {
    const int line = line_, col = col_;
    std::string text;
    bool is_float = false;
    while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
      text += peek();
      advance();
    }
    if (!eof() && peek() == '.') {
      is_float = true;
      text += peek();
      advance();
      while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
        text += peek();
        advance();
      }
    }
    if (!eof() && (peek() == 'e' || peek() == 'E')) {
      is_float = true;
      text += peek();
      advance();
      if (!eof() && (peek() == '+' || peek() == '-')) {
        text += peek();
        advance();
      }
      if (eof() || !std::isdigit(static_cast<unsigned char>(peek())))
        throw SyntaxError{line, col, "malformed number literal '" + text + "'"};
      while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
        text += peek();
        advance();
      }
    }
    Token t;
    t.line = line;
    t.col = col;
    t.text = text;
    if (is_float) {
      t.kind = Tok::FloatLit;
      t.float_value = std::stod(text);
    } else {
      t.kind = Tok::IntLit;
      try {
        t.int_value = std::stoll(text);
      } catch (...) {
        t.kind = Tok::FloatLit;
        t.float_value = std::stod(text);
      }
    }
    out.push_back(std::move(t));
  }

  void lex_string(std::vector<Token>& out) {
    const int line = line_, col = col_;
    const char quote = peek();
    advance();
    if (!eof() && peek() == quote && i_ + 1 < src_.size() && src_[i_ + 1] == quote)
      throw SyntaxError{line, col, "triple-quoted strings are not supported"};
    std::string value;
    while (true) {
      if (eof()) throw SyntaxError{line, col, "unterminated string literal"};
      char c = peek();
      if (c == '\n') throw SyntaxError{line, col, "newline inside string literal"};
      if (c == quote) {
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        if (eof()) throw SyntaxError{line, col, "unterminated string literal"};
        char e = peek();
        switch (e) {
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          case 'r': value += '\r'; break;
          case '\\': value += '\\'; break;
          case '\'': value += '\''; break;
          case '"': value += '"'; break;
          case '0': value += '\0'; break;
          case '\n':
            // Backslash-newline inside a string continues the line.
            ++line_;
            col_ = 0;
            break;
          default:
            value += '\\';
            value += e;
        }
        advance();
        continue;
      }
      value += c;
      advance();
    }
    Token t;
    t.kind = Tok::StrLit;
    t.text = std::move(value);
    t.line = line;
    t.col = col;
    out.push_back(std::move(t));
  }

  void lex_operator(std::vector<Token>& out) {
    const char c = peek();
    const char n = peek2();
    auto two = [&](Tok kind) {
      emit(out, kind);
      advance();
      advance();
    };
    auto one = [&](Tok kind) {
      emit(out, kind);
      advance();
      if (kind == Tok::LParen || kind == Tok::LBracket || kind == Tok::LBrace) ++depth_;
      if (kind == Tok::RParen || kind == Tok::RBracket || kind == Tok::RBrace)
        depth_ = depth_ > 0 ? depth_ - 1 : 0;
    };
    switch (c) {
      case '*': n == '*' ? two(Tok::DoubleStar) : one(Tok::Star); return;
      case '/': n == '/' ? two(Tok::DoubleSlash) : one(Tok::Slash); return;
      case '=': n == '=' ? two(Tok::EqEq) : one(Tok::Assign); return;
      case '!':
        if (n == '=') {
          two(Tok::NotEq);
          return;
        }
        fail("unexpected character '!'");
      case '<': n == '=' ? two(Tok::LtEq) : one(Tok::Lt); return;
      case '>': n == '=' ? two(Tok::GtEq) : one(Tok::Gt); return;
      case '+': one(Tok::Plus); return;
      case '-': one(Tok::Minus); return;
      case '%': one(Tok::Percent); return;
      case '(': one(Tok::LParen); return;
      case ')': one(Tok::RParen); return;
      case '[': one(Tok::LBracket); return;
      case ']': one(Tok::RBracket); return;
      case '{': one(Tok::LBrace); return;
      case '}': one(Tok::RBrace); return;
      case ',': one(Tok::Comma); return;
      case ':': one(Tok::Colon); return;
      case '.': one(Tok::Dot); return;
      case ';': one(Tok::Semicolon); return;
      default: fail(std::string("unexpected character '") + c + "'");
    }
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
  int depth_ = 0;
  std::vector<int> indents_;
};

}  // namespace toolscope::script
