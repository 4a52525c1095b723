#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "mprobe/data_gen.hpp"
#include "mprobe/experiment.hpp"
#include "mprobe/persist.hpp"

using namespace mprobe;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

ExperimentConfig small_config() {
  ExperimentConfig config;
  config.task = TaskSpec::bernoulli(0.5);
  config.n = 20;
  config.m = MRule{MRule::Kind::Literal, 10};
  config.num_paths = 40;
  config.num_replicates = 40;
  config.t1_g = {TestFunction::identity()};
  config.t2_k = {2, 3};
  config.seed = 2024;
  return config;
}

}  // namespace

TEST_CASE("model spec parsing") {
  CHECK(ModelSpec::parse("reference").kind == ModelSpec::Kind::Reference);
  const ModelSpec fractional = ModelSpec::parse("fractional:0.25");
  CHECK(fractional.kind == ModelSpec::Kind::Fractional);
  CHECK(fractional.alpha == doctest::Approx(0.25));
  const ModelSpec drift = ModelSpec::parse("drift:-0.01");
  CHECK(drift.drift.direction == -1);
  CHECK(drift.drift.delta == doctest::Approx(0.01));
  const ModelSpec remote = ModelSpec::parse("remote:some-model");
  CHECK(remote.kind == ModelSpec::Kind::Remote);
  CHECK(remote.endpoint.model_name == "some-model");
  CHECK_THROWS_AS(ModelSpec::parse("nonsense"), std::invalid_argument);
}

TEST_CASE("m rule resolution") {
  const MRule half{MRule::Kind::HalfN, 0};
  CHECK(half.resolve(50, true) == 24);   // 25 rounded down to even
  CHECK(half.resolve(50, false) == 25);
  CHECK(half.resolve(20, true) == 10);
  const MRule twice{MRule::Kind::TwoN, 0};
  CHECK(twice.resolve(50, false) == 100);
  const MRule odd{MRule::Kind::Literal, 25};
  CHECK(odd.resolve(50, false) == 25);
  CHECK_THROWS_AS(odd.resolve(50, true), std::invalid_argument);

  CHECK(MRule::parse_json(nlohmann::json("n/2")).kind == MRule::Kind::HalfN);
  CHECK(MRule::parse_json(nlohmann::json("2n")).kind == MRule::Kind::TwoN);
  CHECK(MRule::parse_json(nlohmann::json(24)).literal == 24);
}

TEST_CASE("config validation") {
  ExperimentConfig config = small_config();
  CHECK_NOTHROW(config.validate());

  ExperimentConfig odd_m = config;
  odd_m.m = MRule{MRule::Kind::Literal, 11};
  CHECK_THROWS_AS(odd_m.validate(), std::invalid_argument);

  ExperimentConfig no_t1 = odd_m;
  no_t1.t1_g.clear();
  no_t1.t2_k = {2};
  CHECK_NOTHROW(no_t1.validate());  // odd m is fine without T1

  ExperimentConfig bad_k = config;
  bad_k.t2_k = {1};
  CHECK_THROWS_AS(bad_k.validate(), std::invalid_argument);

  ExperimentConfig short_m = config;
  short_m.t2_k = {9};  // m = 10 < 9 + 2
  CHECK_THROWS_AS(short_m.validate(), std::invalid_argument);

  ExperimentConfig small_k = config;
  small_k.num_replicates = 19;
  CHECK_THROWS_AS(small_k.validate(), std::invalid_argument);

  ExperimentConfig bad_model = config;
  bad_model.task = TaskSpec::gaussian(0.0);
  bad_model.model = ModelSpec::parse("drift:0.01");
  CHECK_THROWS_AS(bad_model.validate(), std::invalid_argument);

  ExperimentConfig t3_small_j = config;
  t3_small_j.run_t3 = true;
  t3_small_j.num_paths = 3;
  CHECK_THROWS_AS(t3_small_j.validate(), std::invalid_argument);
}

TEST_CASE("config json round-trip and file loading") {
  ExperimentConfig config = small_config();
  config.model = ModelSpec::parse("fractional:0.5");
  config.ordering = Ordering::FixedOrdering;
  config.run_t3 = true;

  const nlohmann::json doc = config.to_json();
  const ExperimentConfig parsed = ExperimentConfig::from_json(doc);
  CHECK(parsed.n == config.n);
  CHECK(parsed.resolved_m() == config.resolved_m());
  CHECK(parsed.num_paths == config.num_paths);
  CHECK(parsed.model.kind == config.model.kind);
  CHECK(parsed.model.alpha == config.model.alpha);
  CHECK(parsed.ordering == config.ordering);
  CHECK(parsed.run_t3 == config.run_t3);
  CHECK(parsed.seed == config.seed);
  CHECK(parsed.t2_k == config.t2_k);

  const auto path = std::filesystem::temp_directory_path() / "mprobe_config_test.json";
  {
    std::ofstream out(path);
    out << R"({"n": 30, "m": "n/2", "J": 50})";
  }
  const ExperimentConfig loaded = ExperimentConfig::load_file(path, small_config());
  CHECK(loaded.n == 30);
  CHECK(loaded.resolved_m() == 14);  // 15 rounded down to even for T1
  CHECK(loaded.num_paths == 50);
  CHECK(loaded.num_replicates == 40);  // kept from base
  std::filesystem::remove(path);
}

TEST_CASE("presets resolve to the documented parameterizations") {
  const ExperimentConfig bern = ExperimentConfig::preset("bernoulli-paper");
  CHECK(bern.task.kind == TaskKind::Bernoulli);
  CHECK(bern.task.theta == 0.5);
  CHECK(bern.n == 50);
  CHECK(bern.resolved_m() == 24);
  CHECK(bern.num_paths == 200);
  CHECK(bern.num_replicates == 300);
  CHECK(bern.t2_k == std::vector<int>{2, 3, 4, 5});
  CHECK(bern.ordering == Ordering::PermutePerPath);

  const ExperimentConfig gauss = ExperimentConfig::preset("gaussian-paper");
  CHECK(gauss.task.kind == TaskKind::Gaussian);
  CHECK(gauss.task.theta == -1.0);
  CHECK(gauss.n == 100);
  CHECK(gauss.resolved_m() == 50);
  CHECK(gauss.t1_g.size() == 2);

  const ExperimentConfig nl = ExperimentConfig::preset("nl-paper");
  CHECK(nl.task.kind == TaskKind::NaturalLanguage);
  CHECK(nl.n == 80);
  CHECK(nl.resolved_m() == 40);
  CHECK(nl.num_paths == 80);

  const ExperimentConfig nl_n100 = ExperimentConfig::preset("nl-paper-n100");
  CHECK(nl_n100.n == 100);
  CHECK(nl_n100.resolved_m() == 50);

  const ExperimentConfig scaling = ExperimentConfig::preset("scaling-paper");
  CHECK(scaling.n_grid == std::vector<int>{20, 50, 100, 200, 400});
  CHECK(scaling.scaling_runs == 9);

  const ExperimentConfig power = ExperimentConfig::preset("drift-power");
  CHECK(power.model.kind == ModelSpec::Kind::Drift);
  CHECK(power.resolved_m() == 100);

  CHECK_THROWS_AS(ExperimentConfig::preset("no-such"), std::invalid_argument);
}

TEST_CASE("run_check_martingale: reference under test passes its own checks") {
  ExperimentConfig config = small_config();
  const MartingaleReport report = run_check_martingale(config);
  REQUIRE(report.results.size() == 3);  // T1 g=z, T2 k=2, k=3
  for (const DiagnosticResult& result : report.results) {
    CHECK(result.meta.n == 20);
    CHECK(result.meta.m == 10);
    CHECK(result.ci.replicates == 40);
  }
  CHECK(report.ensemble_retained > 30);
}

TEST_CASE("run_check_martingale: drift model fails T1") {
  ExperimentConfig config = small_config();
  config.n = 50;
  config.m = MRule{MRule::Kind::Literal, 100};
  config.num_paths = 100;
  config.num_replicates = 60;
  config.t2_k.clear();
  config.model = ModelSpec::parse("drift:0.01");
  config.jobs = 2;
  const MartingaleReport report = run_check_martingale(config);
  REQUIRE(report.results.size() == 1);
  CHECK(report.results[0].verdict == Verdict::Fail);
  CHECK(exit_code_for(report.results) == 2);
}

TEST_CASE("run_check_martingale: language task reports per-x statistics") {
  ExperimentConfig config;
  config.task = TaskSpec::natural_language();
  config.n = 30;
  config.m = MRule{MRule::Kind::Literal, 20};
  config.num_paths = 40;
  config.num_replicates = 30;
  config.t1_g = {TestFunction::identity()};
  config.t2_k = {2};
  config.seed = 5;
  const MartingaleReport report = run_check_martingale(config);
  REQUIRE(report.results.size() == 4);
  CHECK(report.results[0].variant == "g=z,x=0");
  CHECK(report.results[1].variant == "g=z,x=1");
  CHECK(report.results[2].variant == "k=2,x=0");
  CHECK(report.results[3].variant == "k=2,x=1");
}

TEST_CASE("run_check_martingale: byte-identical reruns and report files") {
  const auto dir_a = std::filesystem::temp_directory_path() / "mprobe_run_a";
  const auto dir_b = std::filesystem::temp_directory_path() / "mprobe_run_b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);

  ExperimentConfig config = small_config();
  config.out_dir = dir_a.string();
  const MartingaleReport first = run_check_martingale(config);
  config.out_dir = dir_b.string();
  const MartingaleReport second = run_check_martingale(config);

  for (const char* name :
       {"dataset.txt", "ensemble.txt", "results.jsonl", "results.csv", "plot_martingale.txt"}) {
    CAPTURE(name);
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }
  // config differs only in out_dir
  CHECK(first.results.size() == second.results.size());

  const std::string csv = slurp(dir_a / "results.csv");
  CHECK(csv.substr(0, csv.find('\n')) ==
        "task,model,n,m,J,statistic,k_or_g,value,ci_lo,ci_hi,band,verdict");

  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("run_check_martingale: loads a provided dataset file") {
  const auto dataset_path = std::filesystem::temp_directory_path() / "mprobe_exp_dataset.txt";
  const ObservedDataset data = generate_dataset(TaskSpec::bernoulli(0.3), 26, 77, 0);
  write_dataset_file(dataset_path, data);

  ExperimentConfig config = small_config();
  config.dataset_file = dataset_path.string();
  const MartingaleReport report = run_check_martingale(config);
  REQUIRE(!report.results.empty());
  CHECK(report.results[0].meta.n == 26);  // from the file, not config.n

  ExperimentConfig mismatched = config;
  mismatched.task = TaskSpec::gaussian(0.0);
  mismatched.t1_g = {TestFunction::identity()};
  CHECK_THROWS_AS(run_check_martingale(mismatched), std::invalid_argument);
  std::filesystem::remove(dataset_path);
}

TEST_CASE("run_check_martingale: remote model defaults to a dry run") {
  ExperimentConfig config = small_config();
  config.model = ModelSpec::parse("remote:mock-model");
  config.model.endpoint.mode = SamplingMode::Chat;
  const MartingaleReport report = run_check_martingale(config);
  CHECK(report.dry_run);
  CHECK(report.dry_run_estimate.requests == 40 * 10);  // J paths x m chat requests
  CHECK(report.results.empty());
}

TEST_CASE("run_check_scaling: curves, slopes and files") {
  ExperimentConfig config;
  config.task = TaskSpec::bernoulli(0.5);
  config.n_grid = {20, 40, 80};
  config.num_paths = 60;
  config.scaling_runs = 3;
  config.fractional_alphas = {0.5};
  config.seed = 31;
  config.jobs = 2;
  const auto dir = std::filesystem::temp_directory_path() / "mprobe_scaling";
  std::filesystem::remove_all(dir);
  config.out_dir = dir.string();

  const ScalingReport report = run_check_scaling(config);
  REQUIRE(report.curves.size() == 2);  // reference + fractional(0.5)
  CHECK(report.curves[0].points.size() == 3);
  CHECK(report.curves[0].slope < 0.0);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(report.curves[1].points[i].median_t3 >= report.curves[0].points[i].median_t3);

  CHECK(std::filesystem::exists(dir / "scaling_summary.json"));
  CHECK(std::filesystem::exists(dir / "plot_scaling.txt"));
  std::filesystem::remove_all(dir);

  ExperimentConfig tiny_grid = config;
  tiny_grid.out_dir.clear();
  tiny_grid.n_grid = {10};
  CHECK_THROWS_AS(run_check_scaling(tiny_grid), std::invalid_argument);
}

TEST_CASE("run_fact3: lines and validation") {
  const Fact3Report report = run_fact3("beta:1,1", {0, 5}, 20000, 9);
  REQUIRE(report.lines.size() == 2);
  CHECK(report.lines[0].result.lhs == doctest::Approx(1.0 / 12.0));
  for (const Fact3Line& line : report.lines)
    CHECK(std::abs(line.result.lhs - line.result.rhs) <= 3.0 * line.result.mc_standard_error);

  CHECK_THROWS_AS(run_fact3("beta:1,1", {5}, 0, 9), std::invalid_argument);
  CHECK_THROWS_AS(run_fact3("cauchy:0,1", {5}, 100, 9), std::invalid_argument);
  CHECK_THROWS_AS(run_fact3("beta", {5}, 100, 9), std::invalid_argument);
}

TEST_CASE("run_replicate: calibration smoke and validation") {
  ExperimentConfig config = small_config();
  config.num_paths = 50;
  config.num_replicates = 40;
  config.t2_k = {2};
  config.jobs = 2;
  const ReplicationSummary summary = run_replicate(config, 10);
  REQUIRE(summary.stats.size() == 2);
  for (const ReplicationStat& stat : summary.stats) {
    CHECK(stat.pass + stat.pass_within_band + stat.fail == 10);
    CHECK(stat.fail_frequency() <= 0.3);  // loose smoke bound; acceptance runs the real one
  }

  CHECK_THROWS_AS(run_replicate(config, 1), std::invalid_argument);
}

TEST_CASE("exit codes") {
  DiagnosticResult pass;
  pass.verdict = Verdict::Pass;
  DiagnosticResult band;
  band.verdict = Verdict::PassWithinBand;
  DiagnosticResult fail;
  fail.verdict = Verdict::Fail;
  CHECK(exit_code_for({pass, band}) == 0);
  CHECK(exit_code_for({pass, fail}) == 2);
  CHECK(exit_code_for({}) == 0);
}
