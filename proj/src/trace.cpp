#include "diffhallu/trace.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace diffhallu {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Task, std::string_view>, 2> kTaskNames{{
    {Task::code_review, "code_review"},
    {Task::commit_message, "commit_message"},
}};

constexpr std::array<std::pair<LabelCategory, std::string_view>, 4> kCategoryNames{{
    {LabelCategory::non_hallucination, "non_hallucination"},
    {LabelCategory::uninformative, "uninformative"},
    {LabelCategory::unsure, "unsure"},
    {LabelCategory::hallucination, "hallucination"},
}};

constexpr std::array<std::pair<HallucinationType, std::string_view>, 5> kTypeNames{{
    {HallucinationType::input_inconsistency, "input_inconsistency"},
    {HallucinationType::logic_inconsistency, "logic_inconsistency"},
    {HallucinationType::input_repetition, "input_repetition"},
    {HallucinationType::intent_deviation, "intent_deviation"},
    {HallucinationType::others, "others"},
}};

template <typename Enum, std::size_t K>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, K>& table, Enum value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

template <typename Enum, std::size_t K>
Enum value_of(const std::array<std::pair<Enum, std::string_view>, K>& table, std::string_view name,
              const char* what) {
  for (const auto& [v, n] : table) {
    if (n == name) return v;
  }
  throw std::invalid_argument("unknown " + std::string(what) + " '" + std::string(name) + "'");
}

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool same_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && a == b;
}

bool same_optional_matrix(const std::optional<Eigen::MatrixXd>& a,
                          const std::optional<Eigen::MatrixXd>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_matrix(*a, *b);
}

// Reads record fields, turning every structural problem into a TraceError
// that names the sample and the offending field.
class RecordReader {
 public:
  explicit RecordReader(const json& record) : record_(record) {
    if (!record_.is_object()) fail("", "record is not a JSON object");
    if (auto it = record_.find("sample_id"); it != record_.end() && it->is_string()) {
      sample_id_ = it->get<std::string>();
    }
  }

  const std::string& sample_id() const { return sample_id_; }

  [[noreturn]] void fail(const std::string& field, const std::string& message) const {
    throw TraceError(0, sample_id_, field, message);
  }

  const json* find(const std::string& field) const {
    auto it = record_.find(field);
    return it == record_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& field) const {
    const json* value = find(field);
    if (!value) fail(field, "missing required field");
    return *value;
  }

  std::string text(const json& value, const std::string& field) const {
    if (!value.is_string()) fail(field, "expected a string");
    return value.get<std::string>();
  }

  double real(const json& value, const std::string& field) const {
    if (!value.is_number()) fail(field, "expected a number");
    return value.get<double>();
  }

  std::size_t count(const json& value, const std::string& field) const {
    if (!value.is_number_unsigned()) fail(field, "expected a nonnegative integer");
    return value.get<std::size_t>();
  }

  Eigen::VectorXd vector(const json& value, const std::string& field) const {
    if (!value.is_array()) fail(field, "expected an array of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(value.size()));
    for (std::size_t i = 0; i < value.size(); ++i) {
      out(static_cast<Eigen::Index>(i)) = real(value[i], field + "[" + std::to_string(i) + "]");
    }
    return out;
  }

  Eigen::MatrixXd matrix(const json& value, const std::string& field) const {
    if (!value.is_array()) fail(field, "expected an array of row arrays");
    const auto rows = static_cast<Eigen::Index>(value.size());
    const auto cols = rows == 0 ? Eigen::Index{0}
                                : static_cast<Eigen::Index>(value[0].is_array() ? value[0].size() : 0);
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const json& row = value[static_cast<std::size_t>(r)];
      const std::string row_field = field + "[" + std::to_string(r) + "]";
      if (!row.is_array()) fail(row_field, "expected a row array");
      if (static_cast<Eigen::Index>(row.size()) != cols) fail(row_field, "ragged matrix row");
      for (Eigen::Index c = 0; c < cols; ++c) {
        out(r, c) = real(row[static_cast<std::size_t>(c)], row_field);
      }
    }
    return out;
  }

 private:
  const json& record_;
  std::string sample_id_;
};

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

void check_matrix_entries(const Eigen::MatrixXd& m, const std::string& field,
                          std::vector<Violation>& out) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (!std::isfinite(v) || v < 0.0) {
        out.push_back({field, "entry (" + std::to_string(r) + ", " + std::to_string(c) +
                                  ") must be a finite nonnegative number"});
      }
    }
  }
}

}  // namespace

std::string_view to_string(Task task) { return name_of(kTaskNames, task); }
std::string_view to_string(LabelCategory category) { return name_of(kCategoryNames, category); }
std::string_view to_string(HallucinationType type) { return name_of(kTypeNames, type); }

Task parse_task(std::string_view name) { return value_of(kTaskNames, name, "task"); }
LabelCategory parse_category(std::string_view name) {
  return value_of(kCategoryNames, name, "category");
}
HallucinationType parse_hallucination_type(std::string_view name) {
  return value_of(kTypeNames, name, "hallucination_type");
}

bool EmbeddingPair::operator==(const EmbeddingPair& other) const {
  return same_vector(source, other.source) && same_vector(generated, other.generated);
}

bool GenerationTrace::operator==(const GenerationTrace& other) const {
  return sample_id == other.sample_id && task == other.task &&
         generator_model == other.generator_model &&
         attribution_model == other.attribution_model && source_text == other.source_text &&
         source_tokens == other.source_tokens && generated_text == other.generated_text &&
         generated_tokens == other.generated_tokens && reference_text == other.reference_text &&
         same_optional_matrix(source_attribution, other.source_attribution) &&
         same_optional_matrix(target_attribution, other.target_attribution) &&
         embeddings == other.embeddings &&
         entailment_probability == other.entailment_probability && label == other.label &&
         language == other.language;
}

TraceError::TraceError(std::size_t line, std::string sample_id, std::string field,
                       const std::string& what)
    : std::runtime_error([&] {
        std::string msg;
        if (line > 0) msg += "line " + std::to_string(line) + ": ";
        if (!sample_id.empty()) msg += "sample '" + sample_id + "': ";
        if (!field.empty()) msg += "field '" + field + "': ";
        return msg + what;
      }()),
      line_(line),
      sample_id_(std::move(sample_id)),
      field_(std::move(field)),
      detail_(what) {}

std::vector<Violation> validate_trace(const GenerationTrace& trace) {
  std::vector<Violation> out;
  const auto n = static_cast<Eigen::Index>(trace.source_tokens.size());
  const auto t = static_cast<Eigen::Index>(trace.generated_tokens.size());

  if (trace.sample_id.empty()) out.push_back({"sample_id", "must be nonempty"});
  if (t < 1) out.push_back({"generated_tokens", "at least one generated token is required"});

  std::size_t previous_start = 0;
  for (std::size_t i = 0; i < trace.source_tokens.size(); ++i) {
    const SourceToken& tok = trace.source_tokens[i];
    const std::string field = "source_tokens[" + std::to_string(i) + "]";
    if (tok.char_start >= tok.char_end) {
      out.push_back({field, "char_start must be < char_end"});
    }
    if (tok.char_end > trace.source_text.size()) {
      out.push_back({field, "char_end exceeds source_text length"});
    }
    if (i > 0 && tok.char_start < previous_start) {
      out.push_back({field, "tokens must be ordered by char_start"});
    }
    previous_start = tok.char_start;
  }

  for (std::size_t i = 0; i < trace.generated_tokens.size(); ++i) {
    const GeneratedToken& tok = trace.generated_tokens[i];
    const std::string field = "generated_tokens[" + std::to_string(i) + "]";
    if (!std::isfinite(tok.logit)) out.push_back({field + ".logit", "must be finite"});
    if (!std::isfinite(tok.logprob) || tok.logprob > 0.0) {
      out.push_back({field + ".logprob", "must be finite and <= 0"});
    }
    if (!std::isfinite(tok.entropy) || tok.entropy < 0.0) {
      out.push_back({field + ".entropy", "must be finite and >= 0"});
    }
  }

  if (trace.source_attribution) {
    const Eigen::MatrixXd& a = *trace.source_attribution;
    if (a.rows() != n) {
      out.push_back({"source_attribution", "row count " + std::to_string(a.rows()) +
                                               " != N (" + std::to_string(n) + ")"});
    }
    if (a.cols() != t) {
      out.push_back({"source_attribution", "column count " + std::to_string(a.cols()) +
                                               " != T (" + std::to_string(t) + ")"});
    }
    check_matrix_entries(a, "source_attribution", out);
  }

  if (trace.target_attribution) {
    const Eigen::MatrixXd& a = *trace.target_attribution;
    if (a.rows() != t || a.cols() != t) {
      out.push_back({"target_attribution", "shape " + std::to_string(a.rows()) + "x" +
                                               std::to_string(a.cols()) + " != T x T (T = " +
                                               std::to_string(t) + ")"});
    }
    check_matrix_entries(a, "target_attribution", out);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c <= std::min(r, a.cols() - 1); ++c) {
        if (a(r, c) != 0.0) {
          out.push_back({"target_attribution", "entry (" + std::to_string(r) + ", " +
                                                   std::to_string(c) +
                                                   ") must be zero (only j < t allowed)"});
        }
      }
    }
  }

  for (const auto& [model, pair] : trace.embeddings) {
    const std::string field = "embeddings." + model;
    if (pair.source.size() != pair.generated.size()) {
      out.push_back({field, "source and generated embeddings differ in dimension"});
    }
    if (pair.source.size() == 0) out.push_back({field, "empty embedding"});
    if (!pair.source.allFinite() || !pair.generated.allFinite()) {
      out.push_back({field, "non-finite embedding entry"});
    }
  }

  if (trace.entailment_probability) {
    const double p = *trace.entailment_probability;
    if (!(p >= 0.0 && p <= 1.0)) {
      out.push_back({"entailment_probability", "must lie in [0, 1]"});
    }
  }

  if (trace.label) {
    const bool is_hallucination = trace.label->category == LabelCategory::hallucination;
    if (is_hallucination != trace.label->hallucination_type.has_value()) {
      out.push_back({"label.hallucination_type",
                     "present if and only if category is hallucination"});
    }
  }
  return out;
}

json trace_to_json(const GenerationTrace& trace) {
  json record;
  record["schema_version"] = kTraceSchemaVersion;
  record["sample_id"] = trace.sample_id;
  record["task"] = to_string(trace.task);
  record["generator_model"] = trace.generator_model;
  record["attribution_model"] = trace.attribution_model;
  record["source_text"] = trace.source_text;

  json source_tokens = json::array();
  for (const SourceToken& tok : trace.source_tokens) {
    source_tokens.push_back(
        {{"text", tok.text}, {"char_start", tok.char_start}, {"char_end", tok.char_end}});
  }
  record["source_tokens"] = std::move(source_tokens);

  record["generated_text"] = trace.generated_text;
  json generated_tokens = json::array();
  for (const GeneratedToken& tok : trace.generated_tokens) {
    generated_tokens.push_back({{"text", tok.text},
                                {"logit", tok.logit},
                                {"logprob", tok.logprob},
                                {"entropy", tok.entropy}});
  }
  record["generated_tokens"] = std::move(generated_tokens);

  if (trace.reference_text) record["reference_text"] = *trace.reference_text;
  if (trace.source_attribution) {
    record["source_attribution"] = matrix_to_json(*trace.source_attribution);
  }
  if (trace.target_attribution) {
    record["target_attribution"] = matrix_to_json(*trace.target_attribution);
  }
  if (!trace.embeddings.empty()) {
    json embeddings = json::object();
    for (const auto& [model, pair] : trace.embeddings) {
      embeddings[model] = {{"source", vector_to_json(pair.source)},
                           {"generated", vector_to_json(pair.generated)}};
    }
    record["embeddings"] = std::move(embeddings);
  }
  if (trace.entailment_probability) {
    record["entailment_probability"] = *trace.entailment_probability;
  }
  if (trace.label) {
    json label = {{"category", to_string(trace.label->category)}};
    if (trace.label->hallucination_type) {
      label["hallucination_type"] = to_string(*trace.label->hallucination_type);
    }
    record["label"] = std::move(label);
  }
  if (trace.language) record["language"] = *trace.language;
  return record;
}

GenerationTrace trace_from_json(const json& record) {
  RecordReader in(record);
  GenerationTrace trace;

  const json& version = in.require("schema_version");
  if (!version.is_string() || version.get<std::string>() != kTraceSchemaVersion) {
    in.fail("schema_version", "expected \"" + std::string(kTraceSchemaVersion) + "\"");
  }

  trace.sample_id = in.text(in.require("sample_id"), "sample_id");
  try {
    trace.task = parse_task(in.text(in.require("task"), "task"));
  } catch (const std::invalid_argument& e) {
    in.fail("task", e.what());
  }
  trace.generator_model = in.text(in.require("generator_model"), "generator_model");
  trace.attribution_model = in.text(in.require("attribution_model"), "attribution_model");
  trace.source_text = in.text(in.require("source_text"), "source_text");
  trace.generated_text = in.text(in.require("generated_text"), "generated_text");

  const json& source_tokens = in.require("source_tokens");
  if (!source_tokens.is_array()) in.fail("source_tokens", "expected an array");
  for (std::size_t i = 0; i < source_tokens.size(); ++i) {
    const std::string field = "source_tokens[" + std::to_string(i) + "]";
    const json& tok = source_tokens[i];
    if (!tok.is_object()) in.fail(field, "expected an object");
    auto get = [&](const char* key) -> const json& {
      auto it = tok.find(key);
      if (it == tok.end()) in.fail(field + "." + key, "missing required field");
      return *it;
    };
    trace.source_tokens.push_back({in.text(get("text"), field + ".text"),
                                   in.count(get("char_start"), field + ".char_start"),
                                   in.count(get("char_end"), field + ".char_end")});
  }

  const json& generated_tokens = in.require("generated_tokens");
  if (!generated_tokens.is_array()) in.fail("generated_tokens", "expected an array");
  for (std::size_t i = 0; i < generated_tokens.size(); ++i) {
    const std::string field = "generated_tokens[" + std::to_string(i) + "]";
    const json& tok = generated_tokens[i];
    if (!tok.is_object()) in.fail(field, "expected an object");
    auto get = [&](const char* key) -> const json& {
      auto it = tok.find(key);
      if (it == tok.end()) in.fail(field + "." + key, "missing required field");
      return *it;
    };
    trace.generated_tokens.push_back({in.text(get("text"), field + ".text"),
                                      in.real(get("logit"), field + ".logit"),
                                      in.real(get("logprob"), field + ".logprob"),
                                      in.real(get("entropy"), field + ".entropy")});
  }

  if (const json* v = in.find("reference_text")) {
    trace.reference_text = in.text(*v, "reference_text");
  }
  if (const json* v = in.find("source_attribution")) {
    trace.source_attribution = in.matrix(*v, "source_attribution");
  }
  if (const json* v = in.find("target_attribution")) {
    trace.target_attribution = in.matrix(*v, "target_attribution");
  }
  if (const json* v = in.find("embeddings")) {
    if (!v->is_object()) in.fail("embeddings", "expected an object keyed by embedding model");
    for (const auto& [model, pair] : v->items()) {
      const std::string field = "embeddings." + model;
      if (!pair.is_object() || !pair.contains("source") || !pair.contains("generated")) {
        in.fail(field, "expected {\"source\": [...], \"generated\": [...]}");
      }
      trace.embeddings[model] = {in.vector(pair["source"], field + ".source"),
                                 in.vector(pair["generated"], field + ".generated")};
    }
  }
  if (const json* v = in.find("entailment_probability")) {
    trace.entailment_probability = in.real(*v, "entailment_probability");
  }
  if (const json* v = in.find("label")) {
    if (!v->is_object()) in.fail("label", "expected an object");
    AnnotationLabel label;
    try {
      auto it = v->find("category");
      if (it == v->end()) in.fail("label.category", "missing required field");
      label.category = parse_category(in.text(*it, "label.category"));
      if (auto t = v->find("hallucination_type"); t != v->end()) {
        label.hallucination_type =
            parse_hallucination_type(in.text(*t, "label.hallucination_type"));
      }
    } catch (const std::invalid_argument& e) {
      in.fail("label", e.what());
    }
    trace.label = label;
  }
  if (const json* v = in.find("language")) trace.language = in.text(*v, "language");
  return trace;
}

std::vector<GenerationTrace> parse_traces(std::string_view jsonl) {
  std::vector<GenerationTrace> traces;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    const std::size_t end = std::min(jsonl.find('\n', pos), jsonl.size());
    std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw TraceError(line_no, "", "", std::string("malformed JSON: ") + e.what());
    }

    GenerationTrace trace;
    try {
      trace = trace_from_json(record);
    } catch (const TraceError& e) {
      throw TraceError(line_no, e.sample_id(), e.field(), e.detail());
    }
    if (!seen.insert(trace.sample_id).second) {
      throw TraceError(line_no, trace.sample_id, "sample_id", "duplicate sample_id in file");
    }
    if (auto violations = validate_trace(trace); !violations.empty()) {
      std::string message = violations.front().message;
      if (violations.size() > 1) {
        message += " (+" + std::to_string(violations.size() - 1) + " more violations)";
      }
      throw TraceError(line_no, trace.sample_id, violations.front().field, message);
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

std::vector<GenerationTrace> load_traces(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError(0, "", "", "cannot open trace file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_traces(buffer.str());
}

std::string serialize_traces(const std::vector<GenerationTrace>& traces) {
  std::string out;
  for (const GenerationTrace& trace : traces) {
    out += trace_to_json(trace).dump();
    out += '\n';
  }
  return out;
}

void save_traces(const std::string& path, const std::vector<GenerationTrace>& traces) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << serialize_traces(traces);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace diffhallu
