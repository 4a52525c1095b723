#pragma once

// Config-driven experiment runners behind the CLI: martingale checks,
// uncertainty-scaling comparisons, the posterior-variance identity check,
// and seeded replication studies. Runners return structured reports and,
// when an output directory is configured, persist the resolved config,
// data artifacts, results (JSONL + CSV) and plot-data files. Report files
// contain no timestamps, so a rerun with the same seed is byte-identical.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mprobe/diagnostics.hpp"
#include "mprobe/llm_client.hpp"

namespace mprobe {

struct ModelSpec {
  enum class Kind { Reference, Fractional, Drift, Remote };
  Kind kind = Kind::Reference;
  double alpha = 0.5;       // Fractional
  DriftSpec drift;          // Drift
  EndpointConfig endpoint;  // Remote

  // "reference" | "fractional:<alpha>" | "drift:<delta>" | "remote:<model name>"
  static ModelSpec parse(const std::string& text);
  std::string label() const;
  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& doc);
};

// Path length given literally or derived from n.
struct MRule {
  enum class Kind { Literal, HalfN, TwoN };
  Kind kind = Kind::HalfN;
  int literal = 0;

  // Derived rules round down to even when an even length is required;
  // an odd literal is rejected instead of silently truncated.
  int resolve(int n, bool require_even) const;
  std::string text() const;
  static MRule parse_json(const nlohmann::json& value);
};

struct ExperimentConfig {
  TaskSpec task = TaskSpec::bernoulli(0.5);
  int n = 50;
  MRule m;
  int num_paths = 200;       // J
  int num_replicates = 300;  // K
  double level = 0.95;

  std::vector<TestFunction> t1_g = {TestFunction::identity()};
  std::vector<int> t2_k = {2, 3, 4, 5};
  bool run_t3 = false;

  Ordering ordering = Ordering::PermutePerPath;
  ModelSpec model;  // model under test
  BetaParams prior_beta;
  GaussianPriorParams prior_gaussian;

  std::uint64_t seed = 42;
  std::string out_dir;  // empty: keep everything in memory
  int jobs = 1;

  // check-scaling
  std::vector<int> n_grid = {20, 50, 100, 200, 400};
  int scaling_runs = 9;
  std::vector<double> fractional_alphas = {0.5, 0.25};

  std::string dataset_file;
  std::string prompt_template_file;
  std::string transcript_cache_file;
  bool confirm_network = false;

  bool t1_requested() const { return !t1_g.empty(); }
  int resolved_m() const;
  void validate() const;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig from_json(const nlohmann::json& doc, ExperimentConfig base);
  static ExperimentConfig load_file(const std::filesystem::path& path);
  static ExperimentConfig load_file(const std::filesystem::path& path, ExperimentConfig base);
  static ExperimentConfig preset(const std::string& name);
  static std::vector<std::string> preset_names();
};

// Builds the model under test (or the CI reference when spec.kind is
// Reference). Remote models need a transport; cache may be null.
std::unique_ptr<SequentialPredictiveModel> make_model(const ModelSpec& spec,
                                                      const ExperimentConfig& config,
                                                      std::shared_ptr<HttpTransport> transport,
                                                      TranscriptCache* cache);

struct MartingaleReport {
  nlohmann::json resolved_config;
  std::vector<DiagnosticResult> results;
  int ensemble_retained = 0;
  int ensemble_failed = 0;
  bool dry_run = false;
  RequestEstimate dry_run_estimate;
};

// Full martingale check: dataset (generated or loaded), ensemble under
// the configured ordering, outlier filter, T1/T2 (per x side for the
// language task), bootstrap CIs from the conjugate reference, verdicts.
// Remote models without confirm_network return a dry-run cost estimate.
MartingaleReport run_check_martingale(const ExperimentConfig& config,
                                      std::shared_ptr<HttpTransport> transport = nullptr);

struct ScalingCurve {
  std::string model_label;
  std::vector<ScalingPoint> points;
  double slope = 0.0;
};

struct ScalingReport {
  nlohmann::json resolved_config;
  std::vector<ScalingCurve> curves;
  bool dry_run = false;
  RequestEstimate dry_run_estimate;
};

// Median-T3 curves over the n grid for the model under test, the
// reference, and the configured fractional posteriors (Bernoulli task),
// all conditioned on identical per-n datasets, plus log-log slopes.
ScalingReport run_check_scaling(const ExperimentConfig& config,
                                std::shared_ptr<HttpTransport> transport = nullptr);

struct Fact3Line {
  std::string prior_label;
  int n = 0;
  Fact3Result result;
};

struct Fact3Report {
  nlohmann::json resolved_config;
  std::vector<Fact3Line> lines;
};

// prior_spec: "beta:<a>,<b>" or "gaussian:<mean>,<variance>".
Fact3Report run_fact3(const std::string& prior_spec, const std::vector<int>& n_values, int num_mc,
                      std::uint64_t seed, const std::string& out_dir = "");

struct ReplicationStat {
  std::string statistic;
  std::string variant;
  int pass = 0;
  int pass_within_band = 0;
  int fail = 0;
  double fail_frequency() const;
};

struct ReplicationSummary {
  nlohmann::json resolved_config;
  int replications = 0;
  std::vector<ReplicationStat> stats;
};

// Repeats the martingale check with derived seeds (fresh dataset and
// ensembles each time) and tallies verdict frequencies per statistic.
// Requires at least 10 replications.
ReplicationSummary run_replicate(const ExperimentConfig& config, int replications,
                                 std::shared_ptr<HttpTransport> transport = nullptr);

// 0 when every verdict passes (band included), 2 otherwise.
int exit_code_for(const std::vector<DiagnosticResult>& results);

nlohmann::json diagnostic_result_to_json(const DiagnosticResult& result);
std::string results_csv_header();
std::string diagnostic_result_to_csv(const DiagnosticResult& result);

}  // namespace mprobe
