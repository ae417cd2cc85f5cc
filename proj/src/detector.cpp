#include "diffhallu/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "diffhallu/csv.hpp"

namespace diffhallu {

using nlohmann::json;

namespace {

double softplus(double eta) { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); }

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double accuracy_at_half(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  Eigen::Index correct = 0;
  for (Eigen::Index r = 0; r < eta.size(); ++r) {
    const int predicted = sigmoid(eta(r)) >= 0.5 ? 1 : 0;
    if (predicted == static_cast<int>(y(r))) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(eta.size());
}

}  // namespace

std::string_view to_string(FeatureSet set) {
  switch (set) {
    case FeatureSet::all: return "all";
    case FeatureSet::reference_based: return "reference_based";
    case FeatureSet::reference_free: return "reference_free";
  }
  return "?";
}

FeatureSet parse_feature_set(std::string_view name) {
  if (name == "all") return FeatureSet::all;
  if (name == "ref" || name == "reference_based") return FeatureSet::reference_based;
  if (name == "free" || name == "reference_free") return FeatureSet::reference_free;
  throw std::invalid_argument("unknown feature set '" + std::string(name) + "'");
}

std::string_view to_string(SelectionDirection direction) {
  return direction == SelectionDirection::backward ? "backward" : "forward";
}

SelectionDirection parse_selection_direction(std::string_view name) {
  if (name == "backward") return SelectionDirection::backward;
  if (name == "forward") return SelectionDirection::forward;
  throw std::invalid_argument("unknown selection direction '" + std::string(name) + "'");
}

LabeledDesign LabeledDesign::select_columns(const std::vector<std::size_t>& columns) const {
  LabeledDesign out;
  out.sample_ids = sample_ids;
  out.y = y;
  out.x.resize(x.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    out.x.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(columns[k]));
    out.feature_names.push_back(feature_names.at(columns[k]));
  }
  return out;
}

LabeledDesign build_design(const std::vector<MetricVector>& metric_vectors,
                           const std::map<std::string, AnnotationLabel>& labels,
                           FeatureSet feature_set) {
  LabeledDesign design;

  std::vector<const MetricVector*> labeled;
  std::vector<double> y;
  for (const MetricVector& v : metric_vectors) {
    auto it = labels.find(v.sample_id);
    if (it == labels.end()) {
      design.notes.push_back("excluded sample '" + v.sample_id + "': no label");
      continue;
    }
    const LabelCategory category = it->second.category;
    if (category != LabelCategory::hallucination &&
        category != LabelCategory::non_hallucination) {
      design.notes.push_back("excluded sample '" + v.sample_id + "': category " +
                             std::string(to_string(category)));
      continue;
    }
    labeled.push_back(&v);
    y.push_back(category == LabelCategory::hallucination ? 1.0 : 0.0);
  }

  std::set<std::string> names;
  for (const MetricVector* v : labeled) {
    for (const auto& [name, value] : v->values) {
      const bool ref = metric::is_reference_based(name);
      if (feature_set == FeatureSet::all || (feature_set == FeatureSet::reference_based) == ref) {
        names.insert(name);
      }
    }
  }
  std::vector<std::string> columns(names.begin(), names.end());

  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < labeled.size(); ++r) {
    const auto missing = std::find_if(columns.begin(), columns.end(), [&](const std::string& c) {
      return !labeled[r]->values.contains(c);
    });
    if (missing != columns.end()) {
      design.notes.push_back("excluded sample '" + labeled[r]->sample_id + "': missing metric " +
                             *missing);
    } else {
      kept.push_back(r);
    }
  }
  if (kept.empty()) throw std::runtime_error("build_design: no usable labeled samples remain");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(kept.size()),
                    static_cast<Eigen::Index>(columns.size()));
  design.y.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const MetricVector& v = *labeled[kept[k]];
    design.sample_ids.push_back(v.sample_id);
    design.y(static_cast<Eigen::Index>(k)) = y[kept[k]];
    for (std::size_t c = 0; c < columns.size(); ++c) {
      x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = v.values.at(columns[c]);
    }
  }

  std::vector<std::size_t> varying;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto col = x.col(static_cast<Eigen::Index>(c));
    if (col.maxCoeff() == col.minCoeff()) {
      design.notes.push_back("dropped metric " + columns[c] + ": zero variance");
    } else {
      varying.push_back(c);
    }
  }
  if (varying.empty()) throw std::runtime_error("build_design: no usable metric columns remain");

  design.x.resize(x.rows(), static_cast<Eigen::Index>(varying.size()));
  for (std::size_t k = 0; k < varying.size(); ++k) {
    design.x.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(varying[k]));
    design.feature_names.push_back(columns[varying[k]]);
  }
  return design;
}

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logistic_log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < eta.size(); ++r) total += y(r) * eta(r) - softplus(eta(r));
  return total;
}

DetectorModel fit_logistic(const LabeledDesign& design, const FitOptions& options) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.features();
  if (n == 0) throw std::invalid_argument("fit_logistic: empty design");
  if (design.y.size() != n) throw std::invalid_argument("fit_logistic: label count mismatch");
  const double positives = design.y.sum();
  if (positives == 0.0 || positives == static_cast<double>(n)) {
    throw std::invalid_argument("fit_logistic: labels contain a single class");
  }

  const auto scaled = standardize(design.x);
  Eigen::MatrixXd x(n, p + 1);
  x.col(0).setOnes();
  x.rightCols(p) = scaled.z;

  const double lambda = options.ridge_lambda;
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p + 1, lambda);
  penalty(0) = 0.0;

  auto objective = [&](const Eigen::VectorXd& theta) {
    return logistic_log_likelihood(x * theta, design.y) -
           0.5 * lambda * theta.tail(p).squaredNorm();
  };

  DetectorModel model;
  model.feature_names = design.feature_names;
  model.means = scaled.means;
  model.stds = scaled.stds;
  model.ridge_lambda = lambda;
  model.n_train = static_cast<std::size_t>(n);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);
  double current = objective(theta);
  auto finish = [&](int iterations) {
    const Eigen::VectorXd eta = x * theta;
    model.intercept = theta(0);
    model.coefficients = theta.tail(p);
    model.log_likelihood = logistic_log_likelihood(eta, design.y);
    model.aic = 2.0 * static_cast<double>(p + 1) - 2.0 * model.log_likelihood;
    model.train_accuracy = accuracy_at_half(eta, design.y);
    model.iterations = iterations;
  };

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Eigen::VectorXd mu = (x * theta).unaryExpr([](double e) { return sigmoid(e); });
    const Eigen::VectorXd weights = mu.array() * (1.0 - mu.array());
    const Eigen::VectorXd gradient =
        x.transpose() * (design.y - mu) - (penalty.array() * theta.array()).matrix();
    Eigen::MatrixXd hessian = x.transpose() * weights.asDiagonal() * x;
    hessian.diagonal() += penalty;
    const Eigen::VectorXd step = hessian.ldlt().solve(gradient);
    if (!step.allFinite()) {
      finish(iter - 1);
      throw FitError("fit_logistic: singular Newton system", model);
    }

    // Halve until the penalized likelihood does not decrease.
    double scale = 1.0;
    Eigen::VectorXd candidate = theta + step;
    double value = objective(candidate);
    int halvings = 0;
    while (!(value >= current) && halvings < 60) {
      scale *= 0.5;
      candidate = theta + scale * step;
      value = objective(candidate);
      ++halvings;
    }
    if (!(value >= current)) {
      // No ascent direction left at working precision.
      finish(iter - 1);
      return model;
    }

    const double change = (scale * step).cwiseAbs().maxCoeff();
    theta = candidate;
    current = value;
    if (options.on_iteration) options.on_iteration(iter, current);
    if (change < options.tol) {
      finish(iter);
      return model;
    }
  }
  finish(options.max_iter);
  throw FitError("fit_logistic: no convergence after " + std::to_string(options.max_iter) +
                     " iterations",
                 model);
}

SelectionResult select_features_aic(const LabeledDesign& design, const FitOptions& options,
                                    SelectionDirection direction) {
  const std::size_t p = design.feature_names.size();
  std::vector<std::size_t> current;
  if (direction == SelectionDirection::backward) {
    current.resize(p);
    std::iota(current.begin(), current.end(), std::size_t{0});
  }

  auto aic_of = [&](const std::vector<std::size_t>& columns) {
    return fit_logistic(design.select_columns(columns), options).aic;
  };

  SelectionResult result;
  double current_aic = aic_of(current);
  result.steps.push_back({0, "", current_aic});

  for (int step = 1;; ++step) {
    std::vector<std::size_t> pool;
    if (direction == SelectionDirection::backward) {
      pool = current;
    } else {
      for (std::size_t c = 0; c < p; ++c) {
        if (std::find(current.begin(), current.end(), c) == current.end()) pool.push_back(c);
      }
    }
    if (pool.empty()) break;

    std::size_t best = p;
    double best_aic = std::numeric_limits<double>::infinity();
    for (std::size_t c : pool) {
      std::vector<std::size_t> candidate;
      if (direction == SelectionDirection::backward) {
        std::copy_if(current.begin(), current.end(), std::back_inserter(candidate),
                     [c](std::size_t k) { return k != c; });
      } else {
        candidate = current;
        candidate.insert(std::upper_bound(candidate.begin(), candidate.end(), c), c);
      }
      const double aic = aic_of(candidate);
      if (best == p || aic < best_aic ||
          (aic == best_aic && design.feature_names[c] < design.feature_names[best])) {
        best = c;
        best_aic = aic;
      }
    }
    if (!(best_aic < current_aic)) break;

    if (direction == SelectionDirection::backward) {
      current.erase(std::find(current.begin(), current.end(), best));
    } else {
      current.insert(std::upper_bound(current.begin(), current.end(), best), best);
    }
    current_aic = best_aic;
    result.steps.push_back({step, design.feature_names[best], best_aic});
  }

  for (std::size_t c : current) result.selected.push_back(design.feature_names[c]);
  return result;
}

PredictionSet predict(const DetectorModel& model, const std::vector<MetricVector>& metric_vectors) {
  PredictionSet out;
  const auto p = static_cast<Eigen::Index>(model.feature_names.size());
  Eigen::VectorXd raw(p);
  for (const MetricVector& v : metric_vectors) {
    std::string missing;
    for (Eigen::Index c = 0; c < p && missing.empty(); ++c) {
      const std::string& name = model.feature_names[static_cast<std::size_t>(c)];
      if (auto value = v.get(name)) {
        raw(c) = *value;
      } else {
        missing = name;
      }
    }
    if (!missing.empty()) {
      out.skipped.emplace_back(v.sample_id, "missing feature " + missing);
      continue;
    }
    out.predictions.push_back({v.sample_id, sigmoid(model.linear_predictor(raw))});
  }
  return out;
}

std::vector<int> classify(const std::vector<double>& probabilities, double threshold) {
  std::vector<int> labels;
  labels.reserve(probabilities.size());
  for (double p : probabilities) labels.push_back(p >= threshold ? 1 : 0);
  return labels;
}

json model_to_json(const DetectorModel& model) {
  return {
      {"schema_version", "1"},
      {"feature_names", model.feature_names},
      {"means", to_std(model.means)},
      {"stds", to_std(model.stds)},
      {"coefficients", to_std(model.coefficients)},
      {"intercept", model.intercept},
      {"ridge_lambda", model.ridge_lambda},
      {"log_likelihood", model.log_likelihood},
      {"aic", model.aic},
      {"n_train", model.n_train},
      {"train_accuracy", model.train_accuracy},
      {"iterations", model.iterations},
  };
}

DetectorModel model_from_json(const json& doc) {
  try {
    if (doc.at("schema_version").get<std::string>() != "1") {
      throw std::runtime_error("unsupported model schema_version");
    }
    DetectorModel model;
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    model.means = to_eigen(doc.at("means").get<std::vector<double>>());
    model.stds = to_eigen(doc.at("stds").get<std::vector<double>>());
    model.coefficients = to_eigen(doc.at("coefficients").get<std::vector<double>>());
    model.intercept = doc.at("intercept").get<double>();
    model.ridge_lambda = doc.at("ridge_lambda").get<double>();
    model.log_likelihood = doc.at("log_likelihood").get<double>();
    model.aic = doc.at("aic").get<double>();
    model.n_train = doc.at("n_train").get<std::size_t>();
    model.train_accuracy = doc.value("train_accuracy", 0.0);
    model.iterations = doc.value("iterations", 0);

    const auto p = static_cast<Eigen::Index>(model.feature_names.size());
    if (model.means.size() != p || model.stds.size() != p || model.coefficients.size() != p) {
      throw std::runtime_error("feature_names, means, stds and coefficients differ in length");
    }
    if ((model.stds.array() <= 0.0).any()) throw std::runtime_error("stds must be positive");
    return model;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid model JSON: ") + e.what());
  }
}

std::string coefficient_report_csv(const DetectorModel& model) {
  std::vector<std::size_t> order(model.feature_names.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto coef = [&](std::size_t k) { return model.coefficients(static_cast<Eigen::Index>(k)); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(coef(a)) != std::abs(coef(b))) return std::abs(coef(a)) > std::abs(coef(b));
    return model.feature_names[a] < model.feature_names[b];
  });

  std::string out = "feature,coefficient,abs_coefficient,sign\n";
  for (std::size_t k : order) {
    const double w = coef(k);
    const char* sign = w > 0.0 ? "+" : (w < 0.0 ? "-" : "0");
    out += csv::join({model.feature_names[k], csv::format_double(w),
                      csv::format_double(std::abs(w)), sign}) +
           "\n";
  }
  return out;
}

std::string selection_trace_csv(const SelectionResult& selection) {
  std::string out = "step,feature,aic\n";
  for (const SelectionStep& s : selection.steps) {
    out += csv::join({std::to_string(s.step), s.feature, csv::format_double(s.aic)}) + "\n";
  }
  return out;
}

}  // namespace diffhallu
