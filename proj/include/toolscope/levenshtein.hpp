#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace toolscope {

/// Classic Levenshtein distance, case-insensitive over ASCII.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  if (m == 0) return n;
  if (n == 0) return m;
  auto lower = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
  std::vector<std::size_t> prev(n + 1), cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t subst = prev[j - 1] + (lower(a[i - 1]) == lower(b[j - 1]) ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

struct Suggestion {
  std::string candidate;
  std::size_t distance = 0;
  /// Close enough to phrase as "did you mean ...?". When false the caller
  /// should list the candidates without a guess.
  bool confident = false;
};

namespace detail {
inline bool iequal_prefix(std::string_view longer, std::string_view shorter) {
  if (shorter.size() > longer.size()) return false;
  for (std::size_t i = 0; i < shorter.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(longer[i])) !=
        std::tolower(static_cast<unsigned char>(shorter[i])))
      return false;
  }
  return true;
}
}  // namespace detail

/// Closest candidate by case-insensitive edit distance, ties broken
/// lexicographically. A suggestion is confident when the distance is at most
/// max(2, len/3) or when one name is a prefix of the other (a truncated or
/// over-typed tool name is still an obvious match, e.g. "sumnumbers" / "sum").
inline std::optional<Suggestion> closest_match(std::string_view needle,
                                               const std::vector<std::string>& candidates) {
  if (candidates.empty()) return std::nullopt;
  Suggestion best;
  bool have = false;
  for (const std::string& c : candidates) {
    const std::size_t d = edit_distance(needle, c);
    if (!have || d < best.distance || (d == best.distance && c < best.candidate)) {
      best.candidate = c;
      best.distance = d;
      have = true;
    }
  }
  const std::size_t threshold = std::max<std::size_t>(2, needle.size() / 3);
  best.confident = best.distance <= threshold ||
                   detail::iequal_prefix(needle, best.candidate) ||
                   detail::iequal_prefix(best.candidate, needle);
  return best;
}

}  // namespace toolscope
