#ifndef DIFFHALLU_TESTS_FIXTURES_HPP
#define DIFFHALLU_TESTS_FIXTURES_HPP

#include <cmath>
#include <string>
#include <vector>

#include "diffhallu/trace.hpp"

namespace fixtures {

// The code-review hunk adding ORDER_PATH to SmartStorePlugin (tabs as in the
// original patch).
inline const std::string kOrderPathPatch =
    "@@ -65,6 +65,7 @@ public class SmartStorePlugin extends ForcePlugin {\n"
    " \tpublic static final String LIKE_KEY = \"likeKey\";\n"
    " \tpublic static final String MATCH_KEY = \"matchKey\";\n"
    " \tpublic static final String SMART_SQL = \"smartSql\";\n"
    "+\tpublic static final String ORDER_PATH = \"orderPath\";\n"
    " \tpublic static final String ORDER = \"order\";\n"
    " \tpublic static final String PAGE_SIZE = \"pageSize\";\n"
    " \tpublic static final String QUERY_TYPE = \"queryType\";\n";

// Whitespace tokens of `text` with byte offsets.
inline std::vector<diffhallu::SourceToken> whitespace_tokens(const std::string& text) {
  std::vector<diffhallu::SourceToken> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    if (end > pos) tokens.push_back({text.substr(pos, end - pos), pos, end});
    pos = end;
  }
  return tokens;
}

// Fully populated, valid trace: 3 source tokens (the middle one on an added
// line), 3 generated tokens.
inline diffhallu::GenerationTrace full_trace(const std::string& id = "s1") {
  using namespace diffhallu;
  GenerationTrace t;
  t.sample_id = id;
  t.task = Task::code_review;
  t.generator_model = "gen";
  t.attribution_model = "attr";
  t.source_text = "@@ -1 +1,2 @@\n a\n+b\n c\n";
  t.source_tokens = {{"a", 15, 16}, {"b", 18, 19}, {"c", 21, 22}};
  t.generated_text = "fix the bug";
  t.generated_tokens = {{"fix", 2.0, std::log(0.5), 0.2},
                        {"the", 4.0, std::log(0.25), 0.4},
                        {"bug", 3.0, 0.0, 0.6}};
  t.reference_text = "fix the bug";
  Eigen::MatrixXd a(3, 3);
  a << 1, 0, 2,
       3, 1, 0,
       0.5, 0.5, 0.5;
  t.source_attribution = a;
  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(3, 3);
  target(0, 1) = 0.4;
  target(0, 2) = 0.1;
  target(1, 2) = 0.5;
  t.target_attribution = target;
  t.embeddings["emb"] = {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(1.0, 1.0)};
  t.entailment_probability = 0.9;
  t.label = AnnotationLabel{LabelCategory::hallucination, HallucinationType::intent_deviation};
  t.language = "java";
  return t;
}

}  // namespace fixtures

#endif  // DIFFHALLU_TESTS_FIXTURES_HPP
