#include <catch2/catch_amalgamated.hpp>

#include "toolscope/levenshtein.hpp"

using namespace toolscope;

namespace {
const std::vector<std::string> kMathTools = {"add",  "subtract", "multiply", "division", "sum",
                                             "mean", "median",   "mode",     "min",      "max",
                                             "floor", "ceiling",  "round"};
const std::vector<std::string> kTimeTools = {"get_current_time", "convert_time"};
}  // namespace

TEST_CASE("edit distance basics") {
  CHECK(edit_distance("", "") == 0);
  CHECK(edit_distance("abc", "") == 3);
  CHECK(edit_distance("", "abc") == 3);
  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("ABC", "abc") == 0);
  CHECK(edit_distance("flaw", "lawn") == 2);
}

TEST_CASE("closest match picks the minimum-distance tool") {
  auto s = closest_match("get_curent_time", kTimeTools);
  REQUIRE(s.has_value());
  CHECK(s->candidate == "get_current_time");
  CHECK(s->distance == 1);
  CHECK(s->confident);
}

TEST_CASE("over-typed names still suggest the prefix tool") {
  auto s = closest_match("sumnumbers", kMathTools);
  REQUIRE(s.has_value());
  CHECK(s->candidate == "sum");
  CHECK(s->confident);
}

TEST_CASE("gibberish gets no confident suggestion") {
  auto s = closest_match("zzqqxxjw", kMathTools);
  REQUIRE(s.has_value());
  CHECK_FALSE(s->confident);
}

TEST_CASE("ties break lexicographically") {
  auto s = closest_match("aa", {"ba", "ab"});
  REQUIRE(s.has_value());
  CHECK(s->candidate == "ab");
}

TEST_CASE("empty candidate set") {
  CHECK_FALSE(closest_match("x", {}).has_value());
}
