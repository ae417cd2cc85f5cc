#include "diffhallu/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>

#include "diffhallu/csv.hpp"
#include "diffhallu/diff.hpp"
#include "diffhallu/evaluation.hpp"
#include "diffhallu/metrics.hpp"
#include "diffhallu/synthetic.hpp"

namespace diffhallu {

using nlohmann::json;

namespace {

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

void require_readable(const std::string& path, const char* what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw std::runtime_error(std::string(what) + " '" + path + "' is not a readable file");
  }
}

// Labeled rows usable for binary evaluation, in metrics-file order.
struct BinaryRows {
  std::vector<const MetricVector*> vectors;
  std::vector<int> labels;
};

BinaryRows binary_rows(const std::vector<MetricVector>& metrics, const LabelTable& table) {
  BinaryRows rows;
  for (const MetricVector& v : metrics) {
    auto it = table.labels.find(v.sample_id);
    if (it == table.labels.end()) {
      throw std::runtime_error("sample '" + v.sample_id + "' has no row in the labels file");
    }
    const LabelCategory c = it->second.category;
    if (c == LabelCategory::hallucination || c == LabelCategory::non_hallucination) {
      rows.vectors.push_back(&v);
      rows.labels.push_back(c == LabelCategory::hallucination ? 1 : 0);
    }
  }
  return rows;
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

LabelTable parse_labels_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw std::runtime_error("labels CSV: missing header row");
  const csv::Row& header = rows.front();
  auto column = [&](const char* name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto id_col = column("sample_id");
  const auto category_col = column("category");
  if (!id_col || !category_col) {
    throw std::runtime_error("labels CSV: columns sample_id and category are required");
  }
  const auto type_col = column("hallucination_type");
  const auto language_col = column("language");

  LabelTable table;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const csv::Row& row = rows[r];
    if (row.size() != header.size()) {
      throw std::runtime_error("labels CSV: row " + std::to_string(r + 1) +
                               " has the wrong number of cells");
    }
    const std::string& id = row[*id_col];
    try {
      AnnotationLabel label;
      label.category = parse_category(row[*category_col]);
      if (type_col && !row[*type_col].empty()) {
        label.hallucination_type = parse_hallucination_type(row[*type_col]);
      }
      if ((label.category == LabelCategory::hallucination) !=
          label.hallucination_type.has_value()) {
        throw std::invalid_argument(
            "hallucination_type must be given exactly for hallucination rows");
      }
      if (!table.labels.emplace(id, label).second) {
        throw std::invalid_argument("duplicate sample_id");
      }
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("labels CSV: sample '" + id + "': " + e.what());
    }
    if (language_col && !row[*language_col].empty()) table.languages[id] = row[*language_col];
  }
  return table;
}

LabelTable load_labels(const std::string& path) {
  require_readable(path, "labels file");
  return parse_labels_csv(csv::read_file(path));
}

std::string labels_to_csv(const std::vector<GenerationTrace>& traces) {
  std::string out = "sample_id,category,hallucination_type,language\n";
  for (const GenerationTrace& t : traces) {
    if (!t.label) continue;
    out += csv::join({t.sample_id, std::string(to_string(t.label->category)),
                      t.label->hallucination_type
                          ? std::string(to_string(*t.label->hallucination_type))
                          : std::string(),
                      t.language.value_or("")}) +
           "\n";
  }
  return out;
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
  const std::string ext = ".json";
  if (path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
    return path.substr(0, path.size() - ext.size()) + suffix;
  }
  return path + suffix;
}

int run_score(const ScoreCommand& cmd, std::ostream& log) {
  return guarded(log, [&] {
    require_readable(cmd.traces, "trace file");
    const auto traces = load_traces(cmd.traces);

    std::vector<MetricVector> vectors;
    std::string skips = "sample_id,metric,reason\n";
    std::size_t n_skipped = 0;
    for (const GenerationTrace& trace : traces) {
      vectors.push_back(compute_metric_vector(trace));
      for (const auto& [name, reason] : vectors.back().skipped) {
        skips += csv::join({trace.sample_id, name, reason}) + "\n";
        ++n_skipped;
      }
    }
    csv::write_file(cmd.out, metrics_to_csv(vectors));
    const std::string skip_log = cmd.skip_log.empty() ? cmd.out + ".skipped.log" : cmd.skip_log;
    csv::write_file(skip_log, skips);
    log << "scored " << vectors.size() << " samples; " << n_skipped
        << " skipped metric values listed in " << skip_log << "\n";
    return 0;
  });
}

int run_fit(const FitCommand& cmd, std::ostream& log) {
  return guarded(log, [&] {
    require_readable(cmd.metrics, "metrics file");
    const auto metrics = metrics_from_csv(csv::read_file(cmd.metrics));
    const LabelTable table = load_labels(cmd.labels);

    const LabeledDesign design = build_design(metrics, table.labels, cmd.feature_set);
    for (const std::string& note : design.notes) log << "note: " << note << "\n";
    log << "design: " << design.rows() << " samples x " << design.features() << " features ("
        << to_string(cmd.feature_set) << ")\n";

    FitOptions options;
    options.ridge_lambda = cmd.ridge_lambda;
    const SelectionResult selection = select_features_aic(design, options, cmd.direction);

    std::vector<std::size_t> columns;
    for (const std::string& name : selection.selected) {
      auto it = std::find(design.feature_names.begin(), design.feature_names.end(), name);
      columns.push_back(static_cast<std::size_t>(it - design.feature_names.begin()));
    }
    const DetectorModel model = fit_logistic(design.select_columns(columns), options);

    csv::write_file(cmd.out, dump_json(model_to_json(model)));
    csv::write_file(sibling_path(cmd.out, ".coefficients.csv"), coefficient_report_csv(model));
    csv::write_file(sibling_path(cmd.out, ".selection.csv"), selection_trace_csv(selection));
    log << "selected " << model.feature_names.size() << " of " << design.features()
        << " features; AIC " << model.aic << ", training accuracy " << model.train_accuracy
        << "\n";
    return 0;
  });
}

int run_predict(const PredictCommand& cmd, std::ostream& log) {
  return guarded(log, [&] {
    require_readable(cmd.metrics, "metrics file");
    require_readable(cmd.model, "model file");
    const auto metrics = metrics_from_csv(csv::read_file(cmd.metrics));
    const DetectorModel model = model_from_json(json::parse(csv::read_file(cmd.model)));
    const PredictionSet result = predict(model, metrics);

    std::string out = "sample_id,probability,label\n";
    for (const Prediction& p : result.predictions) {
      out += csv::join({p.sample_id, csv::format_double(p.probability),
                        p.probability >= cmd.threshold ? "1" : "0"}) +
             "\n";
    }
    csv::write_file(cmd.out, out);
    for (const auto& [id, reason] : result.skipped) {
      log << "skipped '" << id << "': " << reason << "\n";
    }
    return 0;
  });
}

int run_evaluate(const EvaluateCommand& cmd, std::ostream& log) {
  return guarded(log, [&] {
    require_readable(cmd.metrics, "metrics file");
    const auto metrics = metrics_from_csv(csv::read_file(cmd.metrics));
    const LabelTable table = load_labels(cmd.labels);
    const BinaryRows rows = binary_rows(metrics, table);

    EvalReport report;
    for (int l : rows.labels) (l == 1 ? report.n_pos : report.n_neg) += 1;
    if (report.n_pos == 0 || report.n_neg == 0) {
      throw std::runtime_error("evaluation needs both hallucination and non_hallucination samples");
    }

    std::set<std::string> names;
    for (const MetricVector* v : rows.vectors) {
      for (const auto& [name, value] : v->values) names.insert(name);
    }
    // Rows that carry `wanted`, as parallel score columns plus labels.
    auto gather = [&](const std::vector<std::string>& wanted) {
      std::map<std::string, std::vector<double>> columns;
      std::vector<int> labels;
      for (std::size_t r = 0; r < rows.vectors.size(); ++r) {
        const MetricVector& v = *rows.vectors[r];
        if (!std::all_of(wanted.begin(), wanted.end(),
                         [&](const std::string& w) { return v.values.contains(w); })) {
          continue;
        }
        for (const std::string& w : wanted) columns[w].push_back(v.values.at(w));
        labels.push_back(rows.labels[r]);
      }
      return std::make_pair(std::move(columns), std::move(labels));
    };

    for (const std::string& name : names) {
      auto [columns, labels] = gather({name});
      const std::vector<double>& scores = columns[name];
      try {
        const double auc = roc_auc(scores, labels);
        const double r_pb = point_biserial(scores, labels);
        report.per_metric_auc[name] = auc;
        report.per_metric_r_pb[name] = r_pb;
        report.per_metric_n[name] = scores.size();
      } catch (const std::invalid_argument& e) {
        log << "note: metric " << name << " not evaluated: " << e.what() << "\n";
      }
    }

    std::vector<std::string> overlap = cmd.overlap_metrics;
    if (overlap.empty()) {
      std::vector<std::pair<double, std::string>> ranked;
      for (const auto& [name, auc] : report.per_metric_auc) ranked.emplace_back(-auc, name);
      std::sort(ranked.begin(), ranked.end());
      for (std::size_t k = 0; k < std::min<std::size_t>(3, ranked.size()); ++k) {
        overlap.push_back(ranked[k].second);
      }
    }
    if (overlap.size() >= 2) {
      auto [columns, labels] = gather(overlap);
      if (!labels.empty()) {
        report.complementarity = top_fraction_overlap(columns, labels, cmd.fraction);
      }
    }

    std::vector<std::string> labeled_positive;
    std::map<std::string, std::string> types;
    std::vector<std::string> with_language;
    for (std::size_t r = 0; r < rows.vectors.size(); ++r) {
      const std::string& id = rows.vectors[r]->sample_id;
      if (rows.labels[r] == 1) {
        labeled_positive.push_back(id);
        types[id] = std::string(to_string(*table.labels.at(id).hallucination_type));
      }
      if (table.languages.contains(id)) with_language.push_back(id);
    }
    report.breakdowns["hallucination_type/labeled"] = breakdown(labeled_positive, types);
    if (!with_language.empty()) {
      report.breakdowns["language/labeled"] = breakdown(with_language, table.languages);
    }

    if (cmd.model) {
      require_readable(*cmd.model, "model file");
      const DetectorModel model = model_from_json(json::parse(csv::read_file(*cmd.model)));
      std::vector<MetricVector> binary;
      for (const MetricVector* v : rows.vectors) binary.push_back(*v);
      const PredictionSet predicted = predict(model, binary);
      for (const auto& [id, reason] : predicted.skipped) {
        log << "note: detector skipped '" << id << "': " << reason << "\n";
      }
      std::vector<double> probabilities;
      std::vector<int> labels;
      for (const Prediction& p : predicted.predictions) {
        probabilities.push_back(p.probability);
        labels.push_back(table.labels.at(p.sample_id).category == LabelCategory::hallucination);
      }
      report.detector_auc = roc_auc(probabilities, labels);
      const std::vector<int> classes = classify(probabilities, cmd.threshold);
      report.detector_accuracy = accuracy(classes, labels);

      std::vector<std::string> predicted_hallucinated;
      std::vector<std::string> predicted_with_language;
      for (std::size_t k = 0; k < classes.size(); ++k) {
        if (classes[k] != 1) continue;
        const std::string& id = predicted.predictions[k].sample_id;
        if (labels[k] == 1) predicted_hallucinated.push_back(id);
        if (table.languages.contains(id)) predicted_with_language.push_back(id);
      }
      report.breakdowns["hallucination_type/detected"] = breakdown(predicted_hallucinated, types);
      if (!predicted_with_language.empty()) {
        report.breakdowns["language/detected"] =
            breakdown(predicted_with_language, table.languages);
      }
    }

    json doc = report_to_json(report);
    if (!cmd.joint_metrics.empty()) {
      if (cmd.joint_metrics.size() != 2) {
        throw std::runtime_error("--joint needs exactly two metric names");
      }
      auto [columns, labels] = gather(cmd.joint_metrics);
      const std::string& a = cmd.joint_metrics[0];
      const std::string& b = cmd.joint_metrics[1];
      const JointDistribution joint = joint_distribution(columns[a], columns[b], labels);
      doc["joint"] = {{"metric_a", a},
                      {"metric_b", b},
                      {"above_hallucination", joint.above_hallucination},
                      {"above_non_hallucination", joint.above_non_hallucination},
                      {"below_hallucination", joint.below_hallucination},
                      {"below_non_hallucination", joint.below_non_hallucination},
                      {"on_diagonal", joint.on_diagonal}};
      if (cmd.joint_out) csv::write_file(*cmd.joint_out, joint_distribution_csv(joint, a, b));
    }
    if (cmd.breakdown_out) csv::write_file(*cmd.breakdown_out, breakdowns_csv(report));
    csv::write_file(cmd.out, dump_json(doc));
    return 0;
  });
}

int run_diff(const DiffCommand& cmd, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    if (!cmd.patch && !cmd.traces) throw std::runtime_error("diff needs a patch file or --traces");
    if (cmd.patch) {
      require_readable(*cmd.patch, "patch file");
      const CodeChange change = parse_unified_diff(csv::read_file(*cmd.patch));
      std::size_t counts[4] = {0, 0, 0, 0};
      for (std::size_t i = 0; i < change.lines.size(); ++i) {
        const DiffLine& line = change.lines[i];
        ++counts[static_cast<int>(line.kind)];
        out << i + 1 << '\t' << to_string(line.kind) << '\t' << line.content_start << '\t'
            << line.content_end << '\t' << change.content(line) << '\n';
      }
      out << "# lines=" << change.lines.size() << " header=" << counts[0]
          << " context=" << counts[1] << " added=" << counts[2] << " removed=" << counts[3]
          << '\n';
    }
    if (cmd.traces) {
      require_readable(*cmd.traces, "trace file");
      for (const GenerationTrace& trace : load_traces(*cmd.traces)) {
        const ChangeMask mask = build_change_mask(trace);
        for (std::size_t i = 0; i < trace.source_tokens.size(); ++i) {
          out << trace.sample_id << '\t' << i + 1 << '\t'
              << (mask.contains(i) ? "changed" : "unchanged") << '\t'
              << trace.source_tokens[i].text << '\n';
        }
        out << "# " << trace.sample_id << " changed=" << mask.changed.size()
            << " unchanged=" << mask.n_tokens - mask.changed.size() << '\n';
      }
    }
    return 0;
  });
}

int run_synth(const SynthCommand& cmd, std::ostream& log) {
  return guarded(log, [&] {
    SyntheticOptions options;
    options.n_samples = cmd.n_samples;
    options.seed = cmd.seed;
    const auto traces = make_synthetic_traces(options);
    save_traces(cmd.out, traces);
    if (cmd.labels_out) csv::write_file(*cmd.labels_out, labels_to_csv(traces));
    log << "wrote " << traces.size() << " synthetic traces (seed " << cmd.seed << ")\n";
    return 0;
  });
}

}  // namespace diffhallu
