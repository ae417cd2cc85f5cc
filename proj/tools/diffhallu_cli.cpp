// diffhallu: score traces, fit and apply the combined detector, evaluate.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "diffhallu/commands.hpp"

int main(int argc, char** argv) {
  using namespace diffhallu;

  CLI::App app{"Hallucination detection for code-change-to-text generations"};
  app.require_subcommand(1);

  ScoreCommand score;
  auto* score_cmd = app.add_subcommand("score", "Compute per-sample metrics from a trace file");
  score_cmd->add_option("--traces", score.traces, "Trace JSONL file")->required();
  score_cmd->add_option("--out", score.out, "Metric CSV to write")->required();
  score_cmd->add_option("--skip-log", score.skip_log, "Skipped-metric log (default <out>.skipped.log)");

  FitCommand fit;
  std::string fit_set = "all";
  std::string direction = "backward";
  auto* fit_cmd = app.add_subcommand("fit", "Fit the logistic detector with AIC selection");
  fit_cmd->add_option("--metrics", fit.metrics, "Metric CSV")->required();
  fit_cmd->add_option("--labels", fit.labels, "Labels CSV")->required();
  fit_cmd->add_option("--out", fit.out, "Model JSON to write")->required();
  fit_cmd->add_option("--feature-set", fit_set, "all | ref | free")
      ->check(CLI::IsMember({"all", "ref", "free"}));
  fit_cmd->add_option("--ridge", fit.ridge_lambda, "Ridge penalty on coefficients")
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--direction", direction, "backward | forward")
      ->check(CLI::IsMember({"backward", "forward"}));

  PredictCommand pred;
  auto* predict_cmd = app.add_subcommand("predict", "Apply a fitted detector");
  predict_cmd->add_option("--metrics", pred.metrics, "Metric CSV")->required();
  predict_cmd->add_option("--model", pred.model, "Model JSON")->required();
  predict_cmd->add_option("--out", pred.out, "Prediction CSV to write")->required();
  predict_cmd->add_option("--threshold", pred.threshold, "Decision threshold")
      ->check(CLI::Range(0.0, 1.0));

  EvaluateCommand eval;
  std::string eval_model;
  std::string joint_out;
  std::string breakdown_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "AUC, point-biserial, overlaps, breakdowns");
  eval_cmd->add_option("--metrics", eval.metrics, "Metric CSV")->required();
  eval_cmd->add_option("--labels", eval.labels, "Labels CSV")->required();
  eval_cmd->add_option("--model", eval_model, "Model JSON (adds detector AUC/accuracy)");
  eval_cmd->add_option("--out", eval.out, "Report JSON to write")->required();
  eval_cmd->add_option("--threshold", eval.threshold, "Detector decision threshold")
      ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--fraction", eval.fraction, "Top fraction for metric overlap")
      ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--overlap", eval.overlap_metrics, "2 or 3 metrics for the overlap")
      ->delimiter(',');
  eval_cmd->add_option("--joint", eval.joint_metrics, "Two metrics for the joint distribution")
      ->delimiter(',');
  eval_cmd->add_option("--joint-out", joint_out, "Joint-distribution CSV");
  eval_cmd->add_option("--breakdown-out", breakdown_out, "Breakdown CSV");

  DiffCommand diff;
  std::string patch;
  std::string diff_traces;
  auto* diff_cmd = app.add_subcommand("diff", "Show diff line classes and token change masks");
  diff_cmd->add_option("patch", patch, "Unified diff file");
  diff_cmd->add_option("--traces", diff_traces, "Trace JSONL: print per-token membership");

  SynthCommand synth;
  std::string synth_labels;
  auto* synth_cmd = app.add_subcommand("synth", "Write seeded synthetic traces");
  synth_cmd->add_option("--out", synth.out, "Trace JSONL to write")->required();
  synth_cmd->add_option("--labels-out", synth_labels, "Labels CSV to write");
  synth_cmd->add_option("-n,--samples", synth.n_samples, "Number of samples");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  if (*score_cmd) return run_score(score, std::cerr);
  if (*fit_cmd) {
    fit.feature_set = parse_feature_set(fit_set);
    fit.direction = parse_selection_direction(direction);
    return run_fit(fit, std::cerr);
  }
  if (*predict_cmd) return run_predict(pred, std::cerr);
  if (*eval_cmd) {
    if (!eval_model.empty()) eval.model = eval_model;
    if (!joint_out.empty()) eval.joint_out = joint_out;
    if (!breakdown_out.empty()) eval.breakdown_out = breakdown_out;
    return run_evaluate(eval, std::cerr);
  }
  if (*diff_cmd) {
    if (!patch.empty()) diff.patch = patch;
    if (!diff_traces.empty()) diff.traces = diff_traces;
    return run_diff(diff, std::cout, std::cerr);
  }
  if (*synth_cmd) {
    if (!synth_labels.empty()) synth.labels_out = synth_labels;
    return run_synth(synth, std::cerr);
  }
  return 1;
}
