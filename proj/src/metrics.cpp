#include "diffhallu/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "diffhallu/csv.hpp"

namespace diffhallu {

namespace {

using NGram = std::vector<std::string>;

std::map<NGram, int> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<NGram, int> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[NGram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

template <typename Accessor>
double token_mean(std::span<const GeneratedToken> tokens, Accessor value) {
  if (tokens.empty()) throw std::invalid_argument("sequence metric needs at least one token");
  double total = 0.0;
  for (const GeneratedToken& tok : tokens) total += value(tok);
  return total / static_cast<double>(tokens.size());
}

}  // namespace

std::vector<std::string> bleu_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double bleu4(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
             double floor) {
  if (candidate.empty() || reference.empty()) {
    throw std::invalid_argument("bleu4: empty candidate or reference");
  }
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cand = ngram_counts(candidate, n);
    const auto ref = ngram_counts(reference, n);
    int matched = 0;
    int total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      if (auto it = ref.find(gram); it != ref.end()) matched += std::min(count, it->second);
    }
    const double precision = total == 0 ? 0.0 : static_cast<double>(matched) / total;
    log_sum += 0.25 * std::log(std::max(precision, floor));
  }
  const auto c = static_cast<double>(candidate.size());
  const auto r = static_cast<double>(reference.size());
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return brevity * std::exp(log_sum);
}

double seq_logprob(std::span<const GeneratedToken> tokens) {
  return token_mean(tokens, [](const GeneratedToken& t) { return -t.logprob; });
}

double seq_logit(std::span<const GeneratedToken> tokens) {
  return token_mean(tokens, [](const GeneratedToken& t) { return t.logit; });
}

double seq_entropy(std::span<const GeneratedToken> tokens) {
  return token_mean(tokens, [](const GeneratedToken& t) { return t.entropy; });
}

MetricVector compute_metric_vector(const GenerationTrace& trace, const ChangeMask& mask) {
  MetricVector out;
  out.sample_id = trace.sample_id;
  auto put = [&out](std::string name, double value) {
    if (std::isfinite(value)) {
      out.values[std::move(name)] = value;
    } else {
      out.skipped[std::move(name)] = "non-finite value";
    }
  };
  auto skip = [&out](std::string name, std::string reason) {
    out.skipped[std::move(name)] = std::move(reason);
  };

  const std::string bleu_name(metric::kBleu4);
  const std::string entail_name(metric::kEntailment);
  if (!trace.reference_text) {
    skip(bleu_name, "no reference_text");
    skip(entail_name, "no reference_text");
  } else {
    const auto candidate = bleu_tokenize(trace.generated_text);
    const auto reference = bleu_tokenize(*trace.reference_text);
    if (candidate.empty() || reference.empty()) {
      skip(bleu_name, "empty generated or reference text");
    } else {
      put(bleu_name, bleu4(candidate, reference));
    }
    if (trace.entailment_probability) {
      put(entail_name, *trace.entailment_probability);
    } else {
      skip(entail_name, "no entailment_probability");
    }
  }

  for (const auto& [model, pair] : trace.embeddings) {
    const std::string name = metric::qualified(metric::kSimilarity, model);
    try {
      put(name, cosine_similarity(pair.generated, pair.source));
    } catch (const std::invalid_argument& e) {
      skip(name, e.what());
    }
  }

  const std::string& attr_model = trace.attribution_model;
  const auto name = [&attr_model](std::string_view kind) {
    return metric::qualified(kind, attr_model);
  };
  if (trace.generated_tokens.empty()) {
    for (auto kind : {metric::kLogprob, metric::kLogit, metric::kEntropy}) {
      skip(name(kind), "no generated tokens");
    }
  } else {
    put(name(metric::kLogprob), seq_logprob(trace.generated_tokens));
    put(name(metric::kLogit), seq_logit(trace.generated_tokens));
    put(name(metric::kEntropy), seq_entropy(trace.generated_tokens));
  }

  if (trace.source_attribution && trace.source_attribution->size() > 0) {
    const Eigen::MatrixXd& a = *trace.source_attribution;
    put(name(metric::kSourceAttr), source_attr(a));
    if (auto v = changed_attr(a, mask)) {
      put(name(metric::kChangedAttr), *v);
    } else {
      skip(name(metric::kChangedAttr), "no changed tokens");
    }
    if (auto v = unchanged_attr(a, mask)) {
      put(name(metric::kUnchangedAttr), *v);
    } else {
      skip(name(metric::kUnchangedAttr), "no unchanged tokens");
    }
  } else {
    for (auto kind : {metric::kSourceAttr, metric::kChangedAttr, metric::kUnchangedAttr}) {
      skip(name(kind), "no source_attribution");
    }
  }

  if (trace.target_attribution) {
    put(name(metric::kTargetAttr), target_attr(*trace.target_attribution));
  } else {
    skip(name(metric::kTargetAttr), "no target_attribution");
  }
  return out;
}

MetricVector compute_metric_vector(const GenerationTrace& trace) {
  return compute_metric_vector(trace, build_change_mask(trace));
}

std::string metrics_to_csv(const std::vector<MetricVector>& vectors) {
  std::set<std::string> names;
  for (const MetricVector& v : vectors) {
    for (const auto& [name, value] : v.values) names.insert(name);
  }
  csv::Row header{"sample_id"};
  header.insert(header.end(), names.begin(), names.end());
  std::string out = csv::join(header) + "\n";
  for (const MetricVector& v : vectors) {
    csv::Row row{v.sample_id};
    for (const std::string& name : names) {
      auto it = v.values.find(name);
      row.push_back(it == v.values.end() ? std::string() : csv::format_double(it->second));
    }
    out += csv::join(row) + "\n";
  }
  return out;
}

std::vector<MetricVector> metrics_from_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw std::runtime_error("metrics CSV: missing header row");
  const csv::Row& header = rows.front();
  if (header.empty() || header.front() != "sample_id") {
    throw std::runtime_error("metrics CSV: first column must be sample_id");
  }
  std::vector<MetricVector> out;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const csv::Row& row = rows[r];
    if (row.size() != header.size()) {
      throw std::runtime_error("metrics CSV: row " + std::to_string(r + 1) + " has " +
                               std::to_string(row.size()) + " cells, header has " +
                               std::to_string(header.size()));
    }
    MetricVector v;
    v.sample_id = row.front();
    if (!seen.insert(v.sample_id).second) {
      throw std::runtime_error("metrics CSV: duplicate sample_id '" + v.sample_id + "'");
    }
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c].empty()) continue;
      try {
        v.values[header[c]] = csv::parse_double(row[c]);
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error("metrics CSV: sample '" + v.sample_id + "', column '" +
                                 header[c] + "': " + e.what());
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace diffhallu
