#include "diffhallu/diff.hpp"

#include <algorithm>
#include <stdexcept>

namespace diffhallu {

namespace {

bool starts_with(std::string_view line, std::string_view prefix) {
  return line.substr(0, prefix.size()) == prefix;
}

bool is_header(std::string_view line) {
  return starts_with(line, "@@") || starts_with(line, "+++") || starts_with(line, "---") ||
         starts_with(line, "diff ") || starts_with(line, "index ");
}

}  // namespace

std::string_view to_string(LineKind kind) {
  switch (kind) {
    case LineKind::header: return "header";
    case LineKind::context: return "context";
    case LineKind::added: return "added";
    case LineKind::removed: return "removed";
  }
  return "?";
}

bool ChangeMask::contains(std::size_t index) const {
  return std::binary_search(changed.begin(), changed.end(), index);
}

std::vector<std::size_t> ChangeMask::unchanged() const {
  std::vector<std::size_t> out;
  out.reserve(n_tokens - changed.size());
  auto next = changed.begin();
  for (std::size_t i = 0; i < n_tokens; ++i) {
    if (next != changed.end() && *next == i) {
      ++next;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

CodeChange parse_unified_diff(std::string_view text) {
  CodeChange change;
  change.raw_text = std::string(text);

  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t newline = text.find('\n', pos);
    const std::size_t line_end = newline == std::string_view::npos ? text.size() : newline + 1;
    std::size_t body_end = newline == std::string_view::npos ? text.size() : newline;
    if (body_end > pos && text[body_end - 1] == '\r') --body_end;
    const std::string_view body = text.substr(pos, body_end - pos);

    DiffLine line;
    line.line_start = pos;
    line.line_end = line_end;
    line.content_end = body_end;
    if (is_header(body)) {
      line.kind = LineKind::header;
      line.content_start = pos;
    } else if (!body.empty() && (body[0] == '+' || body[0] == '-' || body[0] == ' ')) {
      line.kind = body[0] == '+'   ? LineKind::added
                  : body[0] == '-' ? LineKind::removed
                                   : LineKind::context;
      line.marker_offset = pos;
      line.content_start = pos + 1;
    } else {
      line.kind = LineKind::context;
      line.content_start = pos;
    }
    change.lines.push_back(line);
    pos = line_end;
  }
  return change;
}

ChangeMask build_change_mask(const CodeChange& change, const std::vector<SourceToken>& tokens) {
  // Changed content intervals, ascending and disjoint since lines are.
  std::vector<std::pair<std::size_t, std::size_t>> intervals;
  for (const DiffLine& line : change.lines) {
    if ((line.kind == LineKind::added || line.kind == LineKind::removed) &&
        line.content_start < line.content_end) {
      intervals.emplace_back(line.content_start, line.content_end);
    }
  }

  ChangeMask mask;
  mask.n_tokens = tokens.size();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const SourceToken& tok = tokens[i];
    if (tok.char_start >= tok.char_end || tok.char_end > change.raw_text.size()) {
      throw std::out_of_range("source token " + std::to_string(i + 1) + " has offsets [" +
                              std::to_string(tok.char_start) + ", " +
                              std::to_string(tok.char_end) + ") outside the diff text of " +
                              std::to_string(change.raw_text.size()) + " bytes");
    }
    // First interval ending after the token start is the only candidate.
    auto it = std::upper_bound(intervals.begin(), intervals.end(), tok.char_start,
                               [](std::size_t start, const auto& iv) { return start < iv.second; });
    if (it != intervals.end() && it->first < tok.char_end) mask.changed.push_back(i);
  }
  return mask;
}

}  // namespace diffhallu
