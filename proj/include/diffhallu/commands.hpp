#ifndef DIFFHALLU_COMMANDS_HPP
#define DIFFHALLU_COMMANDS_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diffhallu/detector.hpp"
#include "diffhallu/trace.hpp"

// Subcommands of the diffhallu tool. Every run_* returns the process exit
// status: 0 only when all requested outputs were written. Diagnostics go to
// `log`; data goes to files (or `out` for diff).

namespace diffhallu {

struct LabelTable {
  std::map<std::string, AnnotationLabel> labels;
  std::map<std::string, std::string> languages;
};

/// Columns: sample_id, category, hallucination_type (optional), language (optional).
LabelTable parse_labels_csv(std::string_view text);
LabelTable load_labels(const std::string& path);
std::string labels_to_csv(const std::vector<GenerationTrace>& traces);

/// "<stem><suffix>" where stem drops a trailing ".json".
std::string sibling_path(const std::string& path, const std::string& suffix);

struct ScoreCommand {
  std::string traces;
  std::string out;
  std::string skip_log;  // defaults to <out>.skipped.log
};

struct FitCommand {
  std::string metrics;
  std::string labels;
  std::string out;
  FeatureSet feature_set = FeatureSet::all;
  double ridge_lambda = 1e-6;
  SelectionDirection direction = SelectionDirection::backward;
};

struct PredictCommand {
  std::string metrics;
  std::string model;
  std::string out;
  double threshold = 0.5;
};

struct EvaluateCommand {
  std::string metrics;
  std::string labels;
  std::optional<std::string> model;
  std::string out;
  double threshold = 0.5;
  double fraction = 0.25;
  std::vector<std::string> overlap_metrics;  // empty: three best by AUC
  std::vector<std::string> joint_metrics;    // empty or exactly two
  std::optional<std::string> joint_out;
  std::optional<std::string> breakdown_out;
};

struct DiffCommand {
  std::optional<std::string> patch;
  std::optional<std::string> traces;
};

struct SynthCommand {
  std::string out;
  std::optional<std::string> labels_out;
  std::size_t n_samples = 400;
  std::uint64_t seed = 1;
};

int run_score(const ScoreCommand& cmd, std::ostream& log);
int run_fit(const FitCommand& cmd, std::ostream& log);
int run_predict(const PredictCommand& cmd, std::ostream& log);
int run_evaluate(const EvaluateCommand& cmd, std::ostream& log);
int run_diff(const DiffCommand& cmd, std::ostream& out, std::ostream& log);
int run_synth(const SynthCommand& cmd, std::ostream& log);

}  // namespace diffhallu

#endif  // DIFFHALLU_COMMANDS_HPP
