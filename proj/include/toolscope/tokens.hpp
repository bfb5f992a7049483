#pragma once

#include <cctype>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace toolscope {

/// Half-open byte range of one token inside a text.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

namespace detail {
inline bool is_word_byte(unsigned char c) {
  // UTF-8 continuation/lead bytes count as word material so multi-byte
  // characters do not explode into per-byte tokens.
  return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}
}  // namespace detail

/// Rule-based tokenizer: a maximal run of word bytes is one token, every
/// other non-space byte is a token of its own. Whitespace only separates.
inline std::vector<TokenSpan> tokenize_spans(std::string_view text) {
  std::vector<TokenSpan> spans;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (detail::is_word_byte(c)) {
      std::size_t j = i + 1;
      while (j < n && detail::is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
      spans.push_back({i, j});
      i = j;
    } else {
      spans.push_back({i, i + 1});
      ++i;
    }
  }
  return spans;
}

inline std::size_t default_token_count(std::string_view text) {
  std::size_t count = 0;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (detail::is_word_byte(c)) {
      ++count;
      ++i;
      while (i < n && detail::is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    } else {
      ++count;
      ++i;
    }
  }
  return count;
}

/// Pluggable token counter. The default is the deterministic rule-based
/// counter above; a model-specific tokenizer can be swapped in by the host.
struct TokenCounter {
  std::string name = "rule";
  std::function<std::size_t(std::string_view)> count = default_token_count;

  std::size_t operator()(std::string_view text) const { return count(text); }
};

}  // namespace toolscope
