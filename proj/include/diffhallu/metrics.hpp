#ifndef DIFFHALLU_METRICS_HPP
#define DIFFHALLU_METRICS_HPP

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "diffhallu/diff.hpp"
#include "diffhallu/trace.hpp"

namespace diffhallu {

// ---------------------------------------------------------------------------
// Metric names
// ---------------------------------------------------------------------------

namespace metric {
inline constexpr std::string_view kBleu4 = "bleu4";
inline constexpr std::string_view kEntailment = "entailment";
inline constexpr std::string_view kSimilarity = "similarity";
inline constexpr std::string_view kLogprob = "logprob";
inline constexpr std::string_view kLogit = "logit";
inline constexpr std::string_view kEntropy = "entropy";
inline constexpr std::string_view kSourceAttr = "source_attr";
inline constexpr std::string_view kTargetAttr = "target_attr";
inline constexpr std::string_view kChangedAttr = "changed_attr";
inline constexpr std::string_view kUnchangedAttr = "unchanged_attr";

/// "<kind>:<model>"
inline std::string qualified(std::string_view kind, std::string_view model) {
  std::string name(kind);
  name += ':';
  name += model;
  return name;
}

/// bleu4 and entailment need a human reference; everything else does not.
inline bool is_reference_based(std::string_view name) {
  return name == kBleu4 || name == kEntailment;
}
}  // namespace metric

struct MetricVector {
  std::string sample_id;
  std::map<std::string, double> values;
  std::map<std::string, std::string> skipped;  // metric name -> reason

  std::optional<double> get(const std::string& name) const {
    auto it = values.find(name);
    return it == values.end() ? std::nullopt : std::optional<double>(it->second);
  }
};

// ---------------------------------------------------------------------------
// Reference-based
// ---------------------------------------------------------------------------

inline constexpr double kBleuFloor = 1e-9;

/// Lowercased whitespace split.
std::vector<std::string> bleu_tokenize(std::string_view text);

/// Sentence BLEU-4 with clipped n-gram precisions, each floored at `floor`,
/// uniform weights and the usual brevity penalty. Throws on empty input.
double bleu4(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
             double floor = kBleuFloor);

// ---------------------------------------------------------------------------
// Similarity
// ---------------------------------------------------------------------------

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: dimension mismatch");
  const Scalar norms = a.norm() * b.norm();
  if (a.size() == 0 || norms == Scalar(0)) {
    throw std::invalid_argument("cosine_similarity: zero vector");
  }
  return a.reshaped().dot(b.reshaped().template cast<Scalar>()) / norms;
}

// ---------------------------------------------------------------------------
// Sequence uncertainty
// ---------------------------------------------------------------------------

/// Mean of -ln p_t.
double seq_logprob(std::span<const GeneratedToken> tokens);
/// Mean raw logit of the emitted tokens.
double seq_logit(std::span<const GeneratedToken> tokens);
/// Mean per-step entropy (nats).
double seq_entropy(std::span<const GeneratedToken> tokens);

// ---------------------------------------------------------------------------
// Attribution aggregates. A is N x T: rows are source tokens, columns are
// generated tokens. Each aggregate averages, over generated tokens, the
// largest attribution coming from a set of source rows.
// ---------------------------------------------------------------------------

template <typename Derived>
typename Derived::Scalar source_attr(const Eigen::MatrixBase<Derived>& attribution) {
  if (attribution.rows() == 0 || attribution.cols() == 0) {
    throw std::invalid_argument("source_attr: empty attribution matrix");
  }
  return attribution.colwise().maxCoeff().mean();
}

/// Mean over columns of the maximum over `rows`. nullopt when `rows` is empty.
template <typename Derived>
std::optional<typename Derived::Scalar> restricted_attr(const Eigen::MatrixBase<Derived>& attribution,
                                                        const std::vector<std::size_t>& rows) {
  if (attribution.cols() == 0) throw std::invalid_argument("attribution matrix has no columns");
  if (rows.empty()) return std::nullopt;
  for (std::size_t r : rows) {
    if (r >= static_cast<std::size_t>(attribution.rows())) {
      throw std::out_of_range("attribution row " + std::to_string(r) + " out of range");
    }
  }
  return attribution.eval()(rows, Eigen::all).colwise().maxCoeff().mean();
}

template <typename Derived>
std::optional<typename Derived::Scalar> changed_attr(const Eigen::MatrixBase<Derived>& attribution,
                                                     const ChangeMask& mask) {
  if (mask.n_tokens != static_cast<std::size_t>(attribution.rows())) {
    throw std::invalid_argument("changed_attr: mask size differs from attribution rows");
  }
  return restricted_attr(attribution, mask.changed);
}

template <typename Derived>
std::optional<typename Derived::Scalar> unchanged_attr(
    const Eigen::MatrixBase<Derived>& attribution, const ChangeMask& mask) {
  if (mask.n_tokens != static_cast<std::size_t>(attribution.rows())) {
    throw std::invalid_argument("unchanged_attr: mask size differs from attribution rows");
  }
  return restricted_attr(attribution, mask.unchanged());
}

/// `target` is T x T with (j, t) the attribution of earlier token j to token t.
/// Averages max_{j < t} over t = 2..T; a single-token sequence scores 0.
template <typename Derived>
typename Derived::Scalar target_attr(const Eigen::MatrixBase<Derived>& target) {
  using Scalar = typename Derived::Scalar;
  if (target.rows() != target.cols()) throw std::invalid_argument("target_attr: matrix not square");
  const Eigen::Index t_len = target.cols();
  if (t_len <= 1) return Scalar(0);
  Scalar total(0);
  for (Eigen::Index t = 1; t < t_len; ++t) {
    total += target.col(t).head(t).maxCoeff();
  }
  return total / Scalar(t_len - 1);
}

// ---------------------------------------------------------------------------
// Whole-trace assembly
// ---------------------------------------------------------------------------

/// Every metric the trace has inputs for; skipped ones carry a reason.
MetricVector compute_metric_vector(const GenerationTrace& trace, const ChangeMask& mask);
MetricVector compute_metric_vector(const GenerationTrace& trace);

/// CSV: sample_id then one column per metric name (sorted union), empty cell
/// for an absent metric.
std::string metrics_to_csv(const std::vector<MetricVector>& vectors);
std::vector<MetricVector> metrics_from_csv(std::string_view text);

}  // namespace diffhallu

#endif  // DIFFHALLU_METRICS_HPP
