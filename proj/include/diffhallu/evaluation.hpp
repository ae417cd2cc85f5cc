#ifndef DIFFHALLU_EVALUATION_HPP
#define DIFFHALLU_EVALUATION_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace diffhallu {

/// Mann-Whitney ROC-AUC: the share of (positive, negative) pairs where the
/// positive scores higher, ties counting one half. Labels are 0/1. Scores are
/// used as given, no direction flipping. Throws std::invalid_argument when
/// one class is missing or lengths differ.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

double accuracy(std::span<const int> predicted, std::span<const int> labels);

/// Pearson correlation between values and 0/1 labels, via group means and the
/// population standard deviation. Throws on a single class or zero variance.
double point_biserial(std::span<const double> values, std::span<const int> labels);

struct OverlapResult {
  std::vector<std::string> metrics;
  std::size_t top_size = 0;
  /// +1 when higher raw scores indicate hallucination, -1 when flipped.
  std::map<std::string, int> orientation;
  std::map<std::string, std::vector<std::size_t>> top_indices;  // ascending sample indices
  std::map<std::pair<std::string, std::string>, std::size_t> pairwise;
  std::size_t all_intersection = 0;
};

/// Top ceil(fraction * n) samples of every metric after orienting it by the
/// sign of its point-biserial correlation (zero or undefined keeps the raw
/// direction); ties go to the smaller sample index. Needs 2 or 3 metrics.
OverlapResult top_fraction_overlap(const std::map<std::string, std::vector<double>>& columns,
                                   std::span<const int> labels, double fraction = 0.25);

struct GroupShare {
  std::size_t count = 0;
  double share = 0.0;

  bool operator==(const GroupShare&) const = default;
};

using Breakdown = std::map<std::string, GroupShare>;

/// Counts and shares of attribute values among `selector`. Throws
/// std::invalid_argument naming an id that has no attribute.
Breakdown breakdown(const std::vector<std::string>& selector,
                    const std::map<std::string, std::string>& attributes);

struct JointRow {
  double a = 0.0;
  double b = 0.0;
  int label = 0;
};

/// Points with b > a are above the diagonal.
struct JointDistribution {
  std::vector<JointRow> rows;
  std::size_t above_hallucination = 0;
  std::size_t above_non_hallucination = 0;
  std::size_t below_hallucination = 0;
  std::size_t below_non_hallucination = 0;
  std::size_t on_diagonal = 0;
};

JointDistribution joint_distribution(std::span<const double> metric_a,
                                     std::span<const double> metric_b,
                                     std::span<const int> labels);

std::string joint_distribution_csv(const JointDistribution& joint, const std::string& name_a,
                                   const std::string& name_b);

struct EvalReport {
  std::map<std::string, double> per_metric_auc;
  std::map<std::string, double> per_metric_r_pb;
  std::map<std::string, std::size_t> per_metric_n;
  std::optional<double> detector_auc;
  std::optional<double> detector_accuracy;
  std::optional<OverlapResult> complementarity;
  /// group key (e.g. "hallucination_type/labeled") -> value -> share
  std::map<std::string, Breakdown> breakdowns;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

nlohmann::json report_to_json(const EvalReport& report);
std::string breakdowns_csv(const EvalReport& report);

}  // namespace diffhallu

#endif  // DIFFHALLU_EVALUATION_HPP
