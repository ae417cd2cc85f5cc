#ifndef DIFFHALLU_TRACE_HPP
#define DIFFHALLU_TRACE_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace diffhallu {

enum class Task { code_review, commit_message };

enum class LabelCategory { non_hallucination, uninformative, unsure, hallucination };

enum class HallucinationType {
  input_inconsistency,
  logic_inconsistency,
  input_repetition,
  intent_deviation,
  others
};

std::string_view to_string(Task task);
std::string_view to_string(LabelCategory category);
std::string_view to_string(HallucinationType type);

// Parsers throw std::invalid_argument on unknown names.
Task parse_task(std::string_view name);
LabelCategory parse_category(std::string_view name);
HallucinationType parse_hallucination_type(std::string_view name);

struct AnnotationLabel {
  LabelCategory category = LabelCategory::non_hallucination;
  std::optional<HallucinationType> hallucination_type;

  bool operator==(const AnnotationLabel&) const = default;
};

/// A model token of the diff, located by UTF-8 byte offsets [char_start, char_end).
struct SourceToken {
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  bool operator==(const SourceToken&) const = default;
};

/// One emitted token with the uncertainty values of its decoding step.
/// `logprob` is ln p_t of the emitted token; `entropy` is the entropy (nats)
/// of the whole next-token distribution.
struct GeneratedToken {
  std::string text;
  double logit = 0.0;
  double logprob = 0.0;
  double entropy = 0.0;

  bool operator==(const GeneratedToken&) const = default;
};

struct EmbeddingPair {
  Eigen::VectorXd source;
  Eigen::VectorXd generated;

  bool operator==(const EmbeddingPair& other) const;
};

/// Everything recorded for one generated message.
///
/// source_attribution is N x T (row = source token, column = generated token).
/// target_attribution is T x T with entry (j, t) the attribution from earlier
/// generated token j to token t. Only j < t is meaningful; the diagonal and
/// everything with j >= t must be zero.
struct GenerationTrace {
  std::string sample_id;
  Task task = Task::code_review;
  std::string generator_model;
  std::string attribution_model;
  std::string source_text;
  std::vector<SourceToken> source_tokens;
  std::string generated_text;
  std::vector<GeneratedToken> generated_tokens;
  std::optional<std::string> reference_text;
  std::optional<Eigen::MatrixXd> source_attribution;
  std::optional<Eigen::MatrixXd> target_attribution;
  std::map<std::string, EmbeddingPair> embeddings;
  std::optional<double> entailment_probability;
  std::optional<AnnotationLabel> label;
  std::optional<std::string> language;

  // Structural equality; matrices of different shape compare unequal.
  bool operator==(const GenerationTrace& other) const;
};

struct Violation {
  std::string field;
  std::string message;

  bool operator==(const Violation&) const = default;
};

/// Lists every broken invariant of `trace`; empty means valid.
std::vector<Violation> validate_trace(const GenerationTrace& trace);

/// Raised for unreadable or schema-violating trace files. `line` is 1-based,
/// 0 when not tied to a line.
class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, std::string sample_id, std::string field,
             const std::string& what);

  std::size_t line() const noexcept { return line_; }
  const std::string& sample_id() const noexcept { return sample_id_; }
  const std::string& field() const noexcept { return field_; }
  // Message without the line/sample/field prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string sample_id_;
  std::string field_;
  std::string detail_;
};

inline constexpr std::string_view kTraceSchemaVersion = "1";

nlohmann::json trace_to_json(const GenerationTrace& trace);

/// Converts one record. Throws TraceError naming the sample and the field on
/// missing or mistyped fields. Does not run validate_trace.
GenerationTrace trace_from_json(const nlohmann::json& record);

std::vector<GenerationTrace> parse_traces(std::string_view jsonl);
std::vector<GenerationTrace> load_traces(const std::string& path);

std::string serialize_traces(const std::vector<GenerationTrace>& traces);
void save_traces(const std::string& path, const std::vector<GenerationTrace>& traces);

}  // namespace diffhallu

#endif  // DIFFHALLU_TRACE_HPP
