#include "diffhallu/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

#include "diffhallu/csv.hpp"

namespace diffhallu {

using nlohmann::json;

namespace {

void check_labels(std::size_t n_values, std::span<const int> labels, const char* who) {
  if (n_values != labels.size()) {
    throw std::invalid_argument(std::string(who) + ": scores and labels differ in length");
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument(std::string(who) + ": labels must be 0/1");
  }
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_labels(scores.size(), labels, "roc_auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the Mann-Whitney U statistic, kept integral so ties stay exact.
  std::uint64_t doubled_u = 0;
  std::uint64_t negatives_below = 0;
  std::uint64_t n_pos = 0;
  std::uint64_t n_neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? pos : neg) += 1;
      ++j;
    }
    doubled_u += 2 * pos * negatives_below + pos * neg;
    negatives_below += neg;
    n_pos += pos;
    n_neg += neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc_auc: both classes are required");
  return static_cast<double>(doubled_u) / static_cast<double>(2 * n_pos * n_neg);
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

double point_biserial(std::span<const double> values, std::span<const int> labels) {
  check_labels(values.size(), labels, "point_biserial");
  const auto n = static_cast<double>(values.size());
  double sum1 = 0.0;
  double sum0 = 0.0;
  double n1 = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (labels[i] == 1) {
      sum1 += values[i];
      n1 += 1.0;
    } else {
      sum0 += values[i];
    }
  }
  const double n0 = n - n1;
  if (n1 == 0.0 || n0 == 0.0) throw std::invalid_argument("point_biserial: both classes required");

  const double mean = (sum1 + sum0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) throw std::invalid_argument("point_biserial: zero variance");
  return (sum1 / n1 - sum0 / n0) / sd * std::sqrt(n1 * n0 / (n * n));
}

OverlapResult top_fraction_overlap(const std::map<std::string, std::vector<double>>& columns,
                                   std::span<const int> labels, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("top_fraction_overlap: fraction must lie in (0, 1]");
  }
  if (columns.size() < 2 || columns.size() > 3) {
    throw std::invalid_argument("top_fraction_overlap: needs 2 or 3 metrics");
  }
  const std::size_t n = labels.size();
  for (const auto& [name, scores] : columns) {
    if (scores.size() != n) {
      throw std::invalid_argument("top_fraction_overlap: column " + name + " has wrong length");
    }
  }

  OverlapResult out;
  out.top_size = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  out.top_size = std::min(out.top_size, n);
  for (const auto& [name, scores] : columns) {
    out.metrics.push_back(name);
    int sign = 1;
    try {
      if (point_biserial(scores, labels) < 0.0) sign = -1;
    } catch (const std::invalid_argument&) {
    }
    out.orientation[name] = sign;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sign * scores[a] > sign * scores[b];
    });
    std::vector<std::size_t> top(order.begin(),
                                 order.begin() + static_cast<std::ptrdiff_t>(out.top_size));
    std::sort(top.begin(), top.end());
    out.top_indices[name] = std::move(top);
  }

  auto intersect = [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::vector<std::size_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    return both;
  };
  for (std::size_t i = 0; i < out.metrics.size(); ++i) {
    for (std::size_t j = i + 1; j < out.metrics.size(); ++j) {
      out.pairwise[{out.metrics[i], out.metrics[j]}] =
          intersect(out.top_indices[out.metrics[i]], out.top_indices[out.metrics[j]]).size();
    }
  }
  std::vector<std::size_t> common = out.top_indices[out.metrics.front()];
  for (std::size_t i = 1; i < out.metrics.size(); ++i) {
    common = intersect(common, out.top_indices[out.metrics[i]]);
  }
  out.all_intersection = common.size();
  return out;
}

Breakdown breakdown(const std::vector<std::string>& selector,
                    const std::map<std::string, std::string>& attributes) {
  Breakdown out;
  for (const std::string& id : selector) {
    auto it = attributes.find(id);
    if (it == attributes.end()) {
      throw std::invalid_argument("breakdown: sample '" + id + "' has no attribute value");
    }
    out[it->second].count += 1;
  }
  for (auto& [value, group] : out) {
    group.share = static_cast<double>(group.count) / static_cast<double>(selector.size());
  }
  return out;
}

JointDistribution joint_distribution(std::span<const double> metric_a,
                                     std::span<const double> metric_b,
                                     std::span<const int> labels) {
  if (metric_a.size() != metric_b.size()) {
    throw std::invalid_argument("joint_distribution: metric lengths differ");
  }
  check_labels(metric_a.size(), labels, "joint_distribution");
  JointDistribution out;
  for (std::size_t i = 0; i < metric_a.size(); ++i) {
    const double a = metric_a[i];
    const double b = metric_b[i];
    const bool hallucination = labels[i] == 1;
    out.rows.push_back({a, b, labels[i]});
    if (b > a) {
      ++(hallucination ? out.above_hallucination : out.above_non_hallucination);
    } else if (b < a) {
      ++(hallucination ? out.below_hallucination : out.below_non_hallucination);
    } else {
      ++out.on_diagonal;
    }
  }
  return out;
}

std::string joint_distribution_csv(const JointDistribution& joint, const std::string& name_a,
                                   const std::string& name_b) {
  std::string out = csv::join({name_a, name_b, "label"}) + "\n";
  for (const JointRow& row : joint.rows) {
    out += csv::join({csv::format_double(row.a), csv::format_double(row.b),
                      std::to_string(row.label)}) +
           "\n";
  }
  return out;
}

json report_to_json(const EvalReport& report) {
  json doc;
  doc["schema_version"] = "1";
  doc["n_pos"] = report.n_pos;
  doc["n_neg"] = report.n_neg;
  doc["per_metric_auc"] = report.per_metric_auc;
  doc["per_metric_r_pb"] = report.per_metric_r_pb;
  doc["per_metric_n"] = report.per_metric_n;
  if (report.detector_auc) doc["detector_auc"] = *report.detector_auc;
  if (report.detector_accuracy) doc["detector_accuracy"] = *report.detector_accuracy;
  if (report.complementarity) {
    const OverlapResult& c = *report.complementarity;
    json comp;
    comp["metrics"] = c.metrics;
    comp["top_size"] = c.top_size;
    comp["orientation"] = c.orientation;
    comp["top_indices"] = c.top_indices;
    json pairs = json::array();
    for (const auto& [key, size] : c.pairwise) {
      pairs.push_back({{"a", key.first}, {"b", key.second}, {"intersection", size}});
    }
    comp["pairwise"] = std::move(pairs);
    comp["all_intersection"] = c.all_intersection;
    doc["complementarity"] = std::move(comp);
  }
  json groups = json::object();
  for (const auto& [key, table] : report.breakdowns) {
    json values = json::object();
    for (const auto& [value, g] : table) values[value] = {{"count", g.count}, {"share", g.share}};
    groups[key] = std::move(values);
  }
  doc["breakdowns"] = std::move(groups);
  return doc;
}

std::string breakdowns_csv(const EvalReport& report) {
  std::string out = "group,value,count,share\n";
  for (const auto& [key, table] : report.breakdowns) {
    for (const auto& [value, g] : table) {
      out += csv::join({key, value, std::to_string(g.count), csv::format_double(g.share)}) + "\n";
    }
  }
  return out;
}

}  // namespace diffhallu
