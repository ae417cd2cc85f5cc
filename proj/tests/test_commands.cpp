#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "diffhallu/commands.hpp"
#include "diffhallu/metrics.hpp"
#include "diffhallu/trace.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace diffhallu;

namespace {

class Workdir {
 public:
  Workdir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("diffhallu-cli-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~Workdir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

int cli(const std::string& args) {
  const std::string command = std::string(DIFFHALLU_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("score writes one row per trace") {
  Workdir dir;
  save_traces(dir / "t.jsonl", {fixtures::full_trace("s1"), fixtures::full_trace("s2")});
  REQUIRE(cli("score --traces " + (dir / "t.jsonl") + " --out " + (dir / "m.csv")) == 0);
  const auto vectors = metrics_from_csv(slurp(dir / "m.csv"));
  REQUIRE(vectors.size() == 2);
  CHECK(vectors[0].sample_id == "s1");
  CHECK(vectors[0].values.size() == 10);
  CHECK(fs::exists(dir / "m.csv.skipped.log"));
}

TEST_CASE("score rejects an invalid record") {
  Workdir dir;
  GenerationTrace bad = fixtures::full_trace("s1");
  save_traces(dir / "t.jsonl", {bad});
  std::string text = slurp(dir / "t.jsonl");
  const std::string needle = "\"entailment_probability\":0.9";
  REQUIRE(text.find(needle) != std::string::npos);
  text.replace(text.find(needle), needle.size(), "\"entailment_probability\":1.5");
  spit(dir / "t.jsonl", text);
  CHECK(cli("score --traces " + (dir / "t.jsonl") + " --out " + (dir / "m.csv")) != 0);
  CHECK(cli("score --traces " + (dir / "missing.jsonl") + " --out " + (dir / "m.csv")) != 0);
}

TEST_CASE("score leaves reference metrics empty without a reference") {
  Workdir dir;
  GenerationTrace t = fixtures::full_trace("s1");
  t.reference_text.reset();
  save_traces(dir / "t.jsonl", {t, fixtures::full_trace("s2")});
  REQUIRE(cli("score --traces " + (dir / "t.jsonl") + " --out " + (dir / "m.csv")) == 0);
  const auto vectors = metrics_from_csv(slurp(dir / "m.csv"));
  REQUIRE(vectors.size() == 2);
  CHECK_FALSE(vectors[0].get("bleu4"));
  CHECK_FALSE(vectors[0].get("entailment"));
  CHECK(vectors[1].get("bleu4"));
  CHECK(slurp(dir / "m.csv.skipped.log").find("s1") != std::string::npos);
}

TEST_CASE("synth, score, fit, predict, evaluate pipeline") {
  Workdir dir;
  REQUIRE(cli("synth -n 120 --seed 3 --out " + (dir / "t.jsonl") + " --labels-out " +
              (dir / "labels.csv")) == 0);
  REQUIRE(cli("score --traces " + (dir / "t.jsonl") + " --out " + (dir / "m.csv")) == 0);

  const std::string fit_args =
      "fit --metrics " + (dir / "m.csv") + " --labels " + (dir / "labels.csv") + " --out ";
  REQUIRE(cli(fit_args + (dir / "a.json")) == 0);
  REQUIRE(cli(fit_args + (dir / "b.json")) == 0);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  CHECK(slurp(dir / "a.coefficients.csv") == slurp(dir / "b.coefficients.csv"));
  CHECK(slurp(dir / "a.selection.csv").rfind("step,feature,aic\n0,,", 0) == 0);

  REQUIRE(cli(fit_args + (dir / "ref.json") + " --feature-set ref") == 0);
  for (const auto& name : nlohmann::json::parse(slurp(dir / "ref.json"))["feature_names"]) {
    CHECK((name == "bleu4" || name == "entailment"));
  }

  REQUIRE(cli("predict --metrics " + (dir / "m.csv") + " --model " + (dir / "a.json") +
              " --out " + (dir / "p.csv")) == 0);
  const std::string predictions = slurp(dir / "p.csv");
  CHECK(predictions.rfind("sample_id,probability,label\n", 0) == 0);
  CHECK(count_lines(predictions) == 121);

  REQUIRE(cli("evaluate --metrics " + (dir / "m.csv") + " --labels " + (dir / "labels.csv") +
              " --model " + (dir / "a.json") + " --out " + (dir / "r.json") + " --joint-out " +
              (dir / "j.csv") + " --joint bleu4,entailment --breakdown-out " +
              (dir / "b.csv")) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "r.json"));
  CHECK(report.contains("detector_auc"));
  CHECK(report["complementarity"]["metrics"].size() == 3);
  CHECK(report["breakdowns"].contains("language/detected"));
  CHECK(count_lines(slurp(dir / "j.csv")) == 121);

  REQUIRE(cli("evaluate --metrics " + (dir / "m.csv") + " --labels " + (dir / "labels.csv") +
              " --out " + (dir / "r2.json")) == 0);
  const auto plain = nlohmann::json::parse(slurp(dir / "r2.json"));
  CHECK_FALSE(plain.contains("detector_auc"));
  CHECK_FALSE(plain.contains("detector_accuracy"));
}

TEST_CASE("fit fails when metrics and labels share no ids") {
  Workdir dir;
  save_traces(dir / "t.jsonl", {fixtures::full_trace("s1"), fixtures::full_trace("s2")});
  REQUIRE(cli("score --traces " + (dir / "t.jsonl") + " --out " + (dir / "m.csv")) == 0);
  spit(dir / "labels.csv", "sample_id,category,hallucination_type,language\n"
                           "other,non_hallucination,,java\n");
  CHECK(cli("fit --metrics " + (dir / "m.csv") + " --labels " + (dir / "labels.csv") +
            " --out " + (dir / "model.json")) != 0);
  CHECK_FALSE(fs::exists(dir / "model.json"));
}

TEST_CASE("evaluate with a perfect detector") {
  Workdir dir;
  std::string metrics = "sample_id,score\n";
  std::string labels = "sample_id,category,hallucination_type,language\n";
  for (int i = 0; i < 10; ++i) {
    const bool h = i % 2 == 0;
    metrics += "s" + std::to_string(i) + "," + (h ? "0.9" : "0.1") + "\n";
    labels += "s" + std::to_string(i) + "," +
              (h ? "hallucination,others,java\n" : "non_hallucination,,java\n");
  }
  spit(dir / "m.csv", metrics);
  spit(dir / "labels.csv", labels);
  // Model with a positive weight on the single feature.
  spit(dir / "model.json",
       R"({"schema_version":"1","feature_names":["score"],"means":[0.5],"stds":[0.4],)"
       R"("coefficients":[5.0],"intercept":0.0,"ridge_lambda":1e-6,"log_likelihood":0.0,)"
       R"("aic":2.0,"n_train":10,"train_accuracy":1.0,"iterations":1})");
  REQUIRE(cli("evaluate --metrics " + (dir / "m.csv") + " --labels " + (dir / "labels.csv") +
              " --model " + (dir / "model.json") + " --out " + (dir / "r.json") +
              " --overlap score,score") != 0);  // overlap needs distinct metrics
  REQUIRE(cli("evaluate --metrics " + (dir / "m.csv") + " --labels " + (dir / "labels.csv") +
              " --model " + (dir / "model.json") + " --out " + (dir / "r.json")) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "r.json"));
  CHECK(report["detector_auc"] == 1.0);
  CHECK(report["detector_accuracy"] == 1.0);
  CHECK(report["per_metric_auc"]["score"] == 1.0);
  CHECK(report["n_pos"] == 5);
}

TEST_CASE("evaluate rejects metric ids without labels") {
  Workdir dir;
  spit(dir / "m.csv", "sample_id,score\na,1\nb,2\nc,3\n");
  spit(dir / "labels.csv",
       "sample_id,category,hallucination_type,language\na,hallucination,others,go\n"
       "b,non_hallucination,,go\n");
  CHECK(cli("evaluate --metrics " + (dir / "m.csv") + " --labels " + (dir / "labels.csv") +
            " --out " + (dir / "r.json")) != 0);
}

TEST_CASE("diff subcommand") {
  Workdir dir;
  spit(dir / "order.patch", fixtures::kOrderPathPatch);
  REQUIRE(cli("diff " + (dir / "order.patch") + " > " + (dir / "out.txt")) == 0);
  CHECK(slurp(dir / "out.txt").find("# lines=8 header=1 context=6 added=1 removed=0") !=
        std::string::npos);

  spit(dir / "empty.patch", "");
  REQUIRE(cli("diff " + (dir / "empty.patch") + " > " + (dir / "out.txt")) == 0);
  CHECK(slurp(dir / "out.txt") == "# lines=0 header=0 context=0 added=0 removed=0\n");

  spit(dir / "junk.bin", std::string("\x01\x02\xff\xfe\n\x7fzz", 8));
  REQUIRE(cli("diff " + (dir / "junk.bin") + " > " + (dir / "out.txt")) == 0);
  CHECK(slurp(dir / "out.txt").find("context=2") != std::string::npos);

  save_traces(dir / "t.jsonl", {fixtures::full_trace("s1")});
  REQUIRE(cli("diff --traces " + (dir / "t.jsonl") + " > " + (dir / "out.txt")) == 0);
  CHECK(slurp(dir / "out.txt").find("s1\t2\tchanged\tb\n") != std::string::npos);

  CHECK(cli("diff " + (dir / "nope.patch")) != 0);
}
