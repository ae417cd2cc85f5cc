#include <doctest.h>

#include <random>
#include <string>

#include "diffhallu/diff.hpp"
#include "fixtures.hpp"

using namespace diffhallu;

namespace {

std::vector<LineKind> kinds(const CodeChange& change) {
  std::vector<LineKind> out;
  for (const DiffLine& line : change.lines) out.push_back(line.kind);
  return out;
}

std::string reassemble(const CodeChange& change) {
  std::string out;
  for (const DiffLine& line : change.lines) {
    out += change.raw_text.substr(line.line_start, line.line_end - line.line_start);
  }
  return out;
}

}  // namespace

TEST_CASE("ORDER_PATH hunk has one added line") {
  const CodeChange change = parse_unified_diff(fixtures::kOrderPathPatch);
  REQUIRE(change.lines.size() == 8);
  int added = 0;
  int headers = 0;
  int context = 0;
  for (const DiffLine& line : change.lines) {
    added += line.kind == LineKind::added;
    headers += line.kind == LineKind::header;
    context += line.kind == LineKind::context;
  }
  CHECK(added == 1);
  CHECK(headers == 1);
  CHECK(context == 6);
  CHECK(change.lines[0].kind == LineKind::header);
  CHECK(change.lines[4].kind == LineKind::added);
  CHECK(change.content(change.lines[4]) ==
        "\tpublic static final String ORDER_PATH = \"orderPath\";");
}

TEST_CASE("ORDER_PATH tokens on the added line are changed") {
  const auto tokens = fixtures::whitespace_tokens(fixtures::kOrderPathPatch);
  const ChangeMask mask = build_change_mask(parse_unified_diff(fixtures::kOrderPathPatch), tokens);
  std::vector<std::string> changed;
  for (std::size_t i : mask.changed) changed.push_back(tokens[i].text);
  // The lone "+" marker token stays out of C.
  CHECK(changed == std::vector<std::string>{"public", "static", "final", "String",
                                            "ORDER_PATH", "=", "\"orderPath\";"});
  CHECK(mask.changed.size() + mask.unchanged().size() == tokens.size());
}

TEST_CASE("marker-only token is not changed") {
  // "+" token at the marker offset alone never touches content.
  const std::string text = "+x\n";
  const ChangeMask mask =
      build_change_mask(parse_unified_diff(text), {{"+", 0, 1}, {"x", 1, 2}});
  CHECK(mask.changed == std::vector<std::size_t>{1});
}

TEST_CASE("empty diff") {
  const CodeChange change = parse_unified_diff("");
  CHECK(change.lines.empty());
  CHECK(build_change_mask(change, {}).n_tokens == 0);
}

TEST_CASE("line classification rule") {
  CHECK(kinds(parse_unified_diff("+a\n b\n-c\n")) ==
        std::vector<LineKind>{LineKind::added, LineKind::context, LineKind::removed});
  CHECK(kinds(parse_unified_diff("diff --git a/x b/x\nindex 1..2\n--- a/x\n+++ b/x\n@@ -1 +1 @@\n"
                                 "junk\n\n")) ==
        std::vector<LineKind>{LineKind::header, LineKind::header, LineKind::header,
                              LineKind::header, LineKind::header, LineKind::context,
                              LineKind::context});
}

TEST_CASE("offsets and CRLF") {
  const CodeChange change = parse_unified_diff(" ab\r\n+cd");
  REQUIRE(change.lines.size() == 2);
  CHECK(change.lines[0].marker_offset == 0u);
  CHECK(change.lines[0].content_start == 1);
  CHECK(change.lines[0].content_end == 3);
  CHECK(change.lines[0].line_end == 5);
  CHECK(change.lines[1].content_start == 6);
  CHECK(change.lines[1].content_end == 8);
  CHECK(change.content(change.lines[1]) == "cd");
}

TEST_CASE("single added line with one token") {
  const ChangeMask mask = build_change_mask(parse_unified_diff("+abc\n"), {{"abc", 1, 4}});
  CHECK(mask.changed == std::vector<std::size_t>{0});
  CHECK(mask.n_tokens == 1);
}

TEST_CASE("token inside a context line is unchanged") {
  const ChangeMask mask = build_change_mask(parse_unified_diff(" abc\n+def\n"), {{"bc", 2, 4}});
  CHECK(mask.changed.empty());
}

TEST_CASE("token spanning context into an added line is changed") {
  // " ab\n+cd\n": context content [1,3), added content [5,7).
  // Token [2,6) covers "b\n+c": it touches "c" at byte 5.
  const ChangeMask mask = build_change_mask(parse_unified_diff(" ab\n+cd\n"), {{"b\n+c", 2, 6}});
  CHECK(mask.changed == std::vector<std::size_t>{0});
  // Ending exactly at the content start does not overlap.
  const ChangeMask edge = build_change_mask(parse_unified_diff(" ab\n+cd\n"), {{"b\n+", 2, 5}});
  CHECK(edge.changed.empty());
}

TEST_CASE("header overlap never changes a token") {
  const std::string text = "@@ -1 +1 @@\n+x\n";
  const ChangeMask mask = build_change_mask(parse_unified_diff(text), {{"@@", 0, 2}, {"x", 13, 14}});
  CHECK(mask.changed == std::vector<std::size_t>{1});
}

TEST_CASE("out of range token names its index") {
  try {
    build_change_mask(parse_unified_diff("+a\n"), {{"a", 1, 2}, {"zz", 2, 9}});
    FAIL("expected out_of_range");
  } catch (const std::out_of_range& e) {
    CHECK(std::string(e.what()).find("source token 2") != std::string::npos);
  }
}

namespace {

// Random diff made of whitespace-separated words; returns text + tokens.
std::pair<std::string, std::vector<SourceToken>> random_fixture(std::mt19937_64& rng,
                                                                 bool allow_added = true) {
  const char markers[] = {' ', '+', '-', ' '};
  std::uniform_int_distribution<int> n_lines(0, 8);
  std::uniform_int_distribution<int> marker(0, allow_added ? 3 : 0);
  std::uniform_int_distribution<int> n_words(0, 4);
  std::string text = "@@ -1 +1 @@\n";
  const int lines = n_lines(rng);
  for (int l = 0; l < lines; ++l) {
    text += markers[marker(rng)];
    const int words = n_words(rng);
    for (int w = 0; w < words; ++w) text += (w ? " w" : "w") + std::to_string(w);
    text += '\n';
  }
  return {text, fixtures::whitespace_tokens(text)};
}

}  // namespace

TEST_CASE("partition and reassembly over random fixtures") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto [text, tokens] = random_fixture(rng);
    const CodeChange change = parse_unified_diff(text);
    CHECK(reassemble(change) == text);
    const ChangeMask mask = build_change_mask(change, tokens);
    const auto unchanged = mask.unchanged();
    CHECK(mask.changed.size() + unchanged.size() == mask.n_tokens);
    CHECK(mask.n_tokens == tokens.size());
    for (std::size_t i : mask.changed) CHECK_FALSE(std::count(unchanged.begin(), unchanged.end(), i));
    CHECK(build_change_mask(change, tokens) == mask);
  }
}

TEST_CASE("appending an added line never shrinks the changed set") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto [text, tokens] = random_fixture(rng);
    const std::string extended = text + "+extra line\n";
    const ChangeMask before = build_change_mask(parse_unified_diff(text), tokens);
    const ChangeMask after = build_change_mask(parse_unified_diff(extended), tokens);
    for (std::size_t i : before.changed) CHECK(after.contains(i));
  }
}

TEST_CASE("mask from trace") {
  const ChangeMask mask = build_change_mask(fixtures::full_trace());
  CHECK(mask.changed == std::vector<std::size_t>{1});
  CHECK(mask.unchanged() == std::vector<std::size_t>{0, 2});
}
