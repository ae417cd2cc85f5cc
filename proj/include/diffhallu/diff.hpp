#ifndef DIFFHALLU_DIFF_HPP
#define DIFFHALLU_DIFF_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diffhallu/trace.hpp"

namespace diffhallu {

enum class LineKind { header, context, added, removed };

std::string_view to_string(LineKind kind);

/// One physical line of a unified diff. Offsets are byte offsets into the
/// diff text; [line_start, line_end) includes the terminator, while
/// [content_start, content_end) excludes both the marker and the terminator.
struct DiffLine {
  LineKind kind = LineKind::context;
  std::size_t line_start = 0;
  std::size_t line_end = 0;
  std::size_t content_start = 0;
  std::size_t content_end = 0;
  std::optional<std::size_t> marker_offset;

  bool operator==(const DiffLine&) const = default;
};

struct CodeChange {
  std::string raw_text;
  std::vector<DiffLine> lines;

  std::string_view content(const DiffLine& line) const {
    return std::string_view(raw_text).substr(line.content_start,
                                             line.content_end - line.content_start);
  }
};

/// Source-token indices (0-based) whose bytes touch added or removed code.
struct ChangeMask {
  std::vector<std::size_t> changed;  // ascending
  std::size_t n_tokens = 0;

  bool contains(std::size_t index) const;
  std::vector<std::size_t> unchanged() const;

  bool operator==(const ChangeMask&) const = default;
};

/// Classifies every line. Never fails: unrecognized lines become context.
CodeChange parse_unified_diff(std::string_view text);

/// Token i is changed iff [char_start, char_end) overlaps the content of an
/// added or removed line. Throws std::out_of_range naming the first token
/// whose offsets do not fit the diff text.
ChangeMask build_change_mask(const CodeChange& change, const std::vector<SourceToken>& tokens);

inline ChangeMask build_change_mask(const GenerationTrace& trace) {
  return build_change_mask(parse_unified_diff(trace.source_text), trace.source_tokens);
}

}  // namespace diffhallu

#endif  // DIFFHALLU_DIFF_HPP
