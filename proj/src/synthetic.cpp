#include "diffhallu/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

namespace diffhallu {

namespace {

constexpr std::array<const char*, 24> kCodeWords{
    "int",    "return", "value", "config", "client", "path",   "order", "key",
    "string", "list",   "map",   "index",  "size",   "buffer", "open",  "close",
    "read",   "write",  "error", "null",   "self",   "this",   "new",   "count"};

constexpr std::array<const char*, 28> kProseWords{
    "fix",    "add",     "remove", "the",   "for",    "in",      "handling", "update",
    "use",    "instead", "of",     "when",  "should", "this",    "method",   "test",
    "rename", "field",   "order",  "path",  "config", "support", "check",    "null",
    "value",  "client",  "api",    "error"};

constexpr std::array<const char*, 4> kLanguages{"java", "python", "go", "javascript"};

constexpr std::array<HallucinationType, 5> kTypes{
    HallucinationType::input_inconsistency, HallucinationType::logic_inconsistency,
    HallucinationType::input_repetition, HallucinationType::intent_deviation,
    HallucinationType::others};

template <std::size_t K>
const char* pick(std::mt19937_64& rng, const std::array<const char*, K>& words) {
  return words[std::uniform_int_distribution<std::size_t>(0, K - 1)(rng)];
}

// Appends one diff line and records its whitespace-separated tokens.
void append_line(GenerationTrace& trace, char marker, const std::vector<std::string>& words) {
  std::string& text = trace.source_text;
  const std::size_t start = text.size();
  text += marker;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (w > 0) text += ' ';
    text += words[w];
  }
  text += '\n';
  // Tokens never include the marker byte itself.
  std::size_t pos = start + 1;
  while (pos < text.size() - 1) {
    while (pos < text.size() - 1 && text[pos] == ' ') ++pos;
    std::size_t end = pos;
    while (end < text.size() - 1 && text[end] != ' ') ++end;
    if (end > pos) trace.source_tokens.push_back({text.substr(pos, end - pos), pos, end});
    pos = end;
  }
}

}  // namespace

std::vector<GenerationTrace> make_synthetic_traces(const SyntheticOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> line_words(3, 6);

  std::vector<GenerationTrace> traces;
  traces.reserve(options.n_samples);
  for (std::size_t s = 0; s < options.n_samples; ++s) {
    GenerationTrace trace;
    trace.sample_id = "syn-" + std::to_string(s);
    trace.task = unit(rng) < 0.5 ? Task::code_review : Task::commit_message;
    trace.generator_model = options.attribution_model;
    trace.attribution_model = options.attribution_model;
    trace.language = pick(rng, kLanguages);

    const double u = unit(rng);
    const bool hallucinated = u < options.hallucination_rate;
    AnnotationLabel label;
    if (unit(rng) < options.unlabeled_rate) {
      label.category = unit(rng) < 0.5 ? LabelCategory::unsure : LabelCategory::uninformative;
    } else if (hallucinated) {
      label.category = LabelCategory::hallucination;
      label.hallucination_type =
          kTypes[std::uniform_int_distribution<std::size_t>(0, kTypes.size() - 1)(rng)];
    } else {
      label.category = LabelCategory::non_hallucination;
    }
    trace.label = label;
    const double h = hallucinated ? 1.0 : 0.0;

    // Diff: a hunk header, context lines and one to three changed lines.
    const int n_context = std::uniform_int_distribution<int>(2, 5)(rng);
    const int n_changed = std::uniform_int_distribution<int>(1, 3)(rng);
    trace.source_text = "@@ -1," + std::to_string(n_context + 1) + " +1," +
                        std::to_string(n_context + n_changed) + " @@\n";
    std::vector<char> markers(static_cast<std::size_t>(n_context), ' ');
    for (int c = 0; c < n_changed; ++c) markers.push_back(unit(rng) < 0.7 ? '+' : '-');
    std::shuffle(markers.begin(), markers.end(), rng);
    std::vector<bool> row_changed;
    for (char marker : markers) {
      std::vector<std::string> words;
      const int count = line_words(rng);
      for (int w = 0; w < count; ++w) words.emplace_back(pick(rng, kCodeWords));
      const std::size_t before = trace.source_tokens.size();
      append_line(trace, marker, words);
      row_changed.insert(row_changed.end(), trace.source_tokens.size() - before, marker != ' ');
    }
    const auto n_tokens = static_cast<Eigen::Index>(trace.source_tokens.size());

    // Reference and a generation derived from it by word substitution.
    const int ref_len = std::uniform_int_distribution<int>(8, 14)(rng);
    std::vector<std::string> reference;
    for (int w = 0; w < ref_len; ++w) reference.emplace_back(pick(rng, kProseWords));
    const double rate =
        std::clamp(0.3 + options.substitution_shift * h + 0.15 * normal(rng), 0.0, 0.95);
    std::vector<std::string> generated = reference;
    for (auto& word : generated) {
      if (unit(rng) < rate) word = pick(rng, kProseWords);
    }
    auto join = [](const std::vector<std::string>& words) {
      std::string out;
      for (std::size_t w = 0; w < words.size(); ++w) out += (w ? " " : "") + words[w];
      return out;
    };
    trace.reference_text = join(reference);
    trace.generated_text = join(generated);

    // Per-token uncertainty. Logprob and logit carry no label signal.
    const double entropy_level = 1.0 + options.entropy_shift * h + 0.35 * normal(rng);
    for (const std::string& word : generated) {
      GeneratedToken tok;
      tok.text = word;
      tok.entropy = std::max(0.0, entropy_level + 0.3 * normal(rng));
      tok.logprob = -std::abs(0.8 + 0.5 * normal(rng));
      tok.logit = 12.0 + 2.0 * normal(rng);
      trace.generated_tokens.push_back(std::move(tok));
    }
    const auto t_len = static_cast<Eigen::Index>(trace.generated_tokens.size());

    // Attribution: changed rows are scaled down for hallucinated samples.
    const double changed_scale =
        std::exp(-options.changed_attr_shift * h + 0.35 * normal(rng));
    Eigen::MatrixXd source(n_tokens, t_len);
    for (Eigen::Index i = 0; i < n_tokens; ++i) {
      const double scale = row_changed[static_cast<std::size_t>(i)] ? changed_scale : 1.0;
      for (Eigen::Index t = 0; t < t_len; ++t) source(i, t) = scale * unit(rng);
    }
    trace.source_attribution = std::move(source);

    Eigen::MatrixXd target = Eigen::MatrixXd::Zero(t_len, t_len);
    for (Eigen::Index t = 1; t < t_len; ++t) {
      for (Eigen::Index j = 0; j < t; ++j) target(j, t) = unit(rng);
    }
    trace.target_attribution = std::move(target);

    EmbeddingPair embedding{Eigen::VectorXd(8), Eigen::VectorXd(8)};
    for (Eigen::Index d = 0; d < 8; ++d) {
      embedding.source(d) = normal(rng);
      embedding.generated(d) = embedding.source(d) + normal(rng);
    }
    trace.embeddings[options.embedding_model] = std::move(embedding);
    trace.entailment_probability = unit(rng);

    traces.push_back(std::move(trace));
  }
  return traces;
}

}  // namespace diffhallu
