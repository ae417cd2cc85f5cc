#ifndef DIFFHALLU_DETECTOR_HPP
#define DIFFHALLU_DETECTOR_HPP

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "diffhallu/metrics.hpp"
#include "diffhallu/trace.hpp"

namespace diffhallu {

enum class FeatureSet { all, reference_based, reference_free };

std::string_view to_string(FeatureSet set);
/// Accepts "all", "ref"/"reference_based", "free"/"reference_free".
FeatureSet parse_feature_set(std::string_view name);

/// Rows are samples (1 = hallucination), columns are metric features.
struct LabeledDesign {
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  /// Human-readable record of every excluded row and dropped column.
  std::vector<std::string> notes;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index features() const { return x.cols(); }
  /// Same rows restricted to `columns` (indices into feature_names).
  LabeledDesign select_columns(const std::vector<std::size_t>& columns) const;
};

/// Keeps hallucination (1) and non_hallucination (0) samples that carry every
/// selected metric, drops constant columns. Throws std::runtime_error when no
/// rows or no columns remain.
LabeledDesign build_design(const std::vector<MetricVector>& metric_vectors,
                           const std::map<std::string, AnnotationLabel>& labels,
                           FeatureSet feature_set);

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

template <typename Scalar>
struct Standardized {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> z;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> means;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> stds;
};

/// Column z-scores using the population standard deviation. Throws
/// std::invalid_argument on a zero-variance column.
template <typename Derived>
Standardized<typename Derived::Scalar> standardize(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Standardized<Scalar> out;
  const auto n = static_cast<Scalar>(x.rows());
  if (x.rows() == 0) throw std::invalid_argument("standardize: no rows");
  out.means = x.colwise().mean().transpose();
  out.z = x.rowwise() - out.means.transpose();
  out.stds = (out.z.colwise().squaredNorm() / n).cwiseSqrt().transpose();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (!(out.stds(c) > Scalar(0))) {
      throw std::invalid_argument("standardize: column " + std::to_string(c) +
                                  " has zero variance");
    }
  }
  out.z.array().rowwise() /= out.stds.transpose().array();
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

struct FitOptions {
  double ridge_lambda = 1e-6;
  double tol = 1e-10;
  int max_iter = 100;
  /// Called after every accepted IRLS step with (iteration, penalized log-likelihood).
  std::function<void(int, double)> on_iteration;
};

struct DetectorModel {
  std::vector<std::string> feature_names;
  Eigen::VectorXd means;
  Eigen::VectorXd stds;
  Eigen::VectorXd coefficients;  // per standardized feature
  double intercept = 0.0;
  double ridge_lambda = 0.0;
  double log_likelihood = 0.0;  // unpenalized, at the fitted parameters
  double aic = 0.0;
  std::size_t n_train = 0;
  double train_accuracy = 0.0;  // at threshold 0.5
  int iterations = 0;

  /// Linear predictor for raw (unstandardized) feature values.
  template <typename Derived>
  double linear_predictor(const Eigen::MatrixBase<Derived>& raw) const {
    return intercept + ((raw.derived().template cast<double>() - means).array() / stds.array())
                           .matrix()
                           .dot(coefficients);
  }
};

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, DetectorModel last_iterate)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}
  const DetectorModel& last_iterate() const noexcept { return last_iterate_; }

 private:
  DetectorModel last_iterate_;
};

/// Logistic log-likelihood sum_r [y ln s(eta) + (1 - y) ln(1 - s(eta))], evaluated stably.
double logistic_log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y);

/// Ridge-penalized logistic regression on standardized features by IRLS
/// (Newton with step halving). The intercept is not penalized. Throws
/// std::invalid_argument for single-class labels and FitError when the
/// iteration budget runs out.
DetectorModel fit_logistic(const LabeledDesign& design, const FitOptions& options = {});

// ---------------------------------------------------------------------------
// AIC stepwise selection
// ---------------------------------------------------------------------------

enum class SelectionDirection { backward, forward };

std::string_view to_string(SelectionDirection direction);
SelectionDirection parse_selection_direction(std::string_view name);

struct SelectionStep {
  int step = 0;
  std::string feature;  // removed (backward) or added (forward); empty for the start model
  double aic = 0.0;
};

struct SelectionResult {
  std::vector<std::string> selected;
  std::vector<SelectionStep> steps;  // steps[0] is the starting model
};

/// Greedy AIC search. Backward: start from every feature and drop the one whose
/// removal gives the lowest AIC while that is strictly below the current AIC.
/// Forward mirrors it from the intercept-only model. Exact AIC ties go to the
/// lexicographically smallest feature name.
SelectionResult select_features_aic(const LabeledDesign& design, const FitOptions& options = {},
                                    SelectionDirection direction = SelectionDirection::backward);

// ---------------------------------------------------------------------------
// Application
// ---------------------------------------------------------------------------

struct Prediction {
  std::string sample_id;
  double probability = 0.0;
};

struct PredictionSet {
  std::vector<Prediction> predictions;
  std::vector<std::pair<std::string, std::string>> skipped;  // sample_id, reason
};

double sigmoid(double eta);

PredictionSet predict(const DetectorModel& model, const std::vector<MetricVector>& metric_vectors);

/// 1 iff probability >= threshold.
std::vector<int> classify(const std::vector<double>& probabilities, double threshold = 0.5);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

nlohmann::json model_to_json(const DetectorModel& model);
DetectorModel model_from_json(const nlohmann::json& doc);

/// feature,coefficient,abs_coefficient,sign sorted by |coefficient| descending.
std::string coefficient_report_csv(const DetectorModel& model);
std::string selection_trace_csv(const SelectionResult& selection);

}  // namespace diffhallu

#endif  // DIFFHALLU_DETECTOR_HPP
