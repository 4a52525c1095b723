// martingale-probe: audits whether a sequential predictive model behaves
// like a Bayesian learner, by generating sample paths, computing the
// T1/T2/T3 statistics and comparing them against bootstrap confidence
// intervals from exact conjugate reference models.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mprobe/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_file;
  std::string preset;
  std::string model_override;
  std::string endpoint_url;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool confirm_network = false;
  int jobs = 0;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_file, "JSON config file");
  cmd->add_option("--preset", args.preset, "named preset configuration");
  cmd->add_option("--model", args.model_override,
                  "model under test: reference | fractional:<a> | drift:<d> | remote:<name>");
  cmd->add_option("--endpoint-url", args.endpoint_url, "base URL for remote models");
  cmd->add_option("--out-dir", args.out_dir, "output directory for report files");
  cmd->add_option("--seed", args.seed, "root seed")->each([&args](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_flag("--confirm-network", args.confirm_network,
                "allow network calls (remote runs default to a dry-run cost estimate)");
  cmd->add_option("--jobs", args.jobs, "concurrent workers");
}

mprobe::ExperimentConfig resolve_config(const CommonArgs& args) {
  mprobe::ExperimentConfig config;
  if (!args.preset.empty()) config = mprobe::ExperimentConfig::preset(args.preset);
  if (!args.config_file.empty())
    config = mprobe::ExperimentConfig::load_file(args.config_file, std::move(config));
  if (!args.model_override.empty()) {
    const mprobe::EndpointConfig keep = config.model.endpoint;
    config.model = mprobe::ModelSpec::parse(args.model_override);
    if (config.model.kind == mprobe::ModelSpec::Kind::Remote) {
      const std::string name = config.model.endpoint.model_name;
      config.model.endpoint = keep;
      if (!name.empty()) config.model.endpoint.model_name = name;
    }
  }
  if (!args.endpoint_url.empty()) config.model.endpoint.base_url = args.endpoint_url;
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  if (args.seed_set) config.seed = args.seed;
  if (args.confirm_network) config.confirm_network = true;
  if (args.jobs > 0) config.jobs = args.jobs;
  return config;
}

void print_results(const std::vector<mprobe::DiagnosticResult>& results) {
  std::printf("%-4s %-12s %14s %14s %14s %10s  %s\n", "stat", "variant", "observed", "ci_lo",
              "ci_hi", "band", "verdict");
  for (const auto& r : results) {
    std::printf("%-4s %-12s %14.6g %14.6g %14.6g %10.2g  %s\n", r.statistic.c_str(),
                r.variant.c_str(), r.observed, r.ci.lower, r.ci.upper, r.band_halfwidth,
                mprobe::to_string(r.verdict).c_str());
  }
}

int cmd_check_martingale(const CommonArgs& args) {
  const mprobe::ExperimentConfig config = resolve_config(args);
  const mprobe::MartingaleReport report = mprobe::run_check_martingale(config);
  if (report.dry_run) {
    std::printf("dry run (no network calls made): %ld requests, ~%ld completion tokens\n",
                report.dry_run_estimate.requests, report.dry_run_estimate.completion_tokens);
    std::printf("rerun with --confirm-network to execute\n");
    return 0;
  }
  print_results(report.results);
  std::printf("paths retained %d, failed %d\n", report.ensemble_retained, report.ensemble_failed);
  if (!config.out_dir.empty()) std::printf("report written to %s\n", config.out_dir.c_str());
  return mprobe::exit_code_for(report.results);
}

int cmd_check_scaling(const CommonArgs& args) {
  const mprobe::ExperimentConfig config = resolve_config(args);
  const mprobe::ScalingReport report = mprobe::run_check_scaling(config);
  if (report.dry_run) {
    std::printf("dry run (no network calls made): %ld requests, ~%ld completion tokens\n",
                report.dry_run_estimate.requests, report.dry_run_estimate.completion_tokens);
    return 0;
  }
  for (const auto& curve : report.curves) {
    std::printf("%s  (log-log slope %.3f)\n", curve.model_label.c_str(), curve.slope);
    for (const auto& pt : curve.points)
      std::printf("  n=%-5d m=%-5d median_t3=%.6g  [%.6g, %.6g]\n", pt.n, pt.m, pt.median_t3,
                  pt.t3_q25, pt.t3_q75);
  }
  if (!config.out_dir.empty()) std::printf("report written to %s\n", config.out_dir.c_str());
  return 0;
}

int cmd_fact3(const std::string& prior_spec, const std::vector<int>& n_values, int num_mc,
              std::uint64_t seed, const std::string& out_dir) {
  const mprobe::Fact3Report report = mprobe::run_fact3(prior_spec, n_values, num_mc, seed, out_dir);
  bool all_within = true;
  for (const auto& line : report.lines) {
    const double diff = std::abs(line.result.lhs - line.result.rhs);
    const bool within = diff <= 3.0 * line.result.mc_standard_error;
    all_within = all_within && within;
    std::printf("%s n=%-4d lhs=%.8g rhs=%.8g se=%.3g  %s\n", line.prior_label.c_str(), line.n,
                line.result.lhs, line.result.rhs, line.result.mc_standard_error,
                within ? "within 3 SE" : "OUTSIDE 3 SE");
  }
  return all_within ? 0 : 2;
}

int cmd_replicate(const CommonArgs& args, int replications) {
  const mprobe::ExperimentConfig config = resolve_config(args);
  const mprobe::ReplicationSummary summary = mprobe::run_replicate(config, replications);
  std::printf("%-4s %-12s %6s %6s %6s %10s\n", "stat", "variant", "pass", "band", "fail", "fail_freq");
  for (const auto& stat : summary.stats) {
    std::printf("%-4s %-12s %6d %6d %6d %10.3f\n", stat.statistic.c_str(), stat.variant.c_str(),
                stat.pass, stat.pass_within_band, stat.fail, stat.fail_frequency());
  }
  if (!config.out_dir.empty()) std::printf("summary written to %s\n", config.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Martingale and epistemic-uncertainty audit for sequential predictive models"};
  app.require_subcommand(1);

  CommonArgs martingale_args;
  CLI::App* check_martingale =
      app.add_subcommand("check-martingale", "sample paths, compute T1/T2, compare with bootstrap CIs");
  add_common_flags(check_martingale, martingale_args);

  CommonArgs scaling_args;
  CLI::App* check_scaling =
      app.add_subcommand("check-scaling", "median-T3 scaling curves and log-log slopes");
  add_common_flags(check_scaling, scaling_args);

  std::string fact3_prior = "beta:1,1";
  std::vector<int> fact3_n = {0, 5, 20};
  int fact3_num_mc = 100000;
  std::uint64_t fact3_seed = 42;
  std::string fact3_out;
  CLI::App* fact3 = app.add_subcommand(
      "fact3", "check that mean posterior variance equals mean squared estimation error");
  fact3->add_option("--prior", fact3_prior, "beta:<a>,<b> or gaussian:<mean>,<variance>");
  fact3->add_option("--n", fact3_n, "dataset sizes")->delimiter(',');
  fact3->add_option("--num-mc", fact3_num_mc, "Monte Carlo replicates");
  fact3->add_option("--seed", fact3_seed, "root seed");
  fact3->add_option("--out-dir", fact3_out, "output directory");

  CommonArgs replicate_args;
  int replications = 100;
  CLI::App* replicate =
      app.add_subcommand("replicate", "repeat check-martingale with derived seeds; tally verdicts");
  add_common_flags(replicate, replicate_args);
  replicate->add_option("-R,--replications", replications, "number of replications");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check_martingale->parsed()) return cmd_check_martingale(martingale_args);
    if (check_scaling->parsed()) return cmd_check_scaling(scaling_args);
    if (fact3->parsed()) return cmd_fact3(fact3_prior, fact3_n, fact3_num_mc, fact3_seed, fact3_out);
    if (replicate->parsed()) return cmd_replicate(replicate_args, replications);
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return 1;
}
