#pragma once

// Shared test helpers: seeded generators for property-style suites.

#include <cstdint>
#include <random>
#include <string>

#include "toolscope/value.hpp"

namespace testsupport {

using toolscope::Value;
using toolscope::ValueList;
using toolscope::ValueMap;

inline std::string random_word(std::mt19937_64& rng, std::size_t max_len = 8) {
  static const char alphabet[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 _-'\"\\\n\t.,:;{}[]()";
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, sizeof(alphabet) - 2);
  std::string out;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) out += alphabet[pick(rng)];
  return out;
}

inline std::string random_bytes(std::mt19937_64& rng, std::size_t max_len = 64) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> byte(0, 255);
  std::string out;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) out += static_cast<char>(byte(rng));
  return out;
}

/// Random value drawn from the literal grammar. Scalars only at depth 0.
inline Value random_literal_value(std::mt19937_64& rng, int depth = 3) {
  std::uniform_int_distribution<int> kind(0, depth > 0 ? 7 : 4);
  switch (kind(rng)) {
    case 0: return Value::none();
    case 1: return Value::boolean(rng() % 2 == 0);
    case 2: {
      std::uniform_int_distribution<std::int64_t> d(std::numeric_limits<std::int64_t>::min(),
                                                    std::numeric_limits<std::int64_t>::max());
      return Value::integer(d(rng));
    }
    case 3: {
      std::uniform_real_distribution<double> d(-1e9, 1e9);
      std::uniform_int_distribution<int> shape(0, 2);
      switch (shape(rng)) {
        case 0: return Value::real(d(rng));
        case 1: return Value::real(d(rng) * 1e-12);
        default: return Value::real(std::floor(d(rng)));  // integral floats
      }
    }
    case 4: return Value::str(random_word(rng, 12));
    case 5: {
      std::uniform_int_distribution<std::size_t> n(0, 4);
      ValueList items;
      const std::size_t count = n(rng);
      for (std::size_t i = 0; i < count; ++i) items.push_back(random_literal_value(rng, depth - 1));
      return Value::list(std::move(items));
    }
    case 6: {
      std::uniform_int_distribution<std::size_t> n(0, 3);
      ValueList items;
      const std::size_t count = n(rng);
      for (std::size_t i = 0; i < count; ++i) items.push_back(random_literal_value(rng, depth - 1));
      return Value::tuple(std::move(items));
    }
    default: {
      std::uniform_int_distribution<std::size_t> n(0, 3);
      ValueMap entries;
      const std::size_t count = n(rng);
      for (std::size_t i = 0; i < count; ++i) {
        // Unique string keys keep equality checks simple.
        entries.emplace_back(Value::str("k" + std::to_string(i) + random_word(rng, 3)),
                             random_literal_value(rng, depth - 1));
      }
      return Value::map(std::move(entries));
    }
  }
}

}  // namespace testsupport
