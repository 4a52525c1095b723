#pragma once

// Test statistics and check machinery.
//
// T1 aggregates first-half-minus-second-half differences of a test
// function g over paths; T2 aggregates lag-k increment/value products;
// T3 is the inter-quartile range of per-path maximum-likelihood
// estimates, the spread of the approximate martingale posterior.
// Observed statistics are compared against bootstrap confidence intervals
// generated from an exact reference model, widened by an acceptable
// deviation band of half-width 0.1/n.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mprobe/models.hpp"
#include "mprobe/sampler.hpp"
#include "mprobe/stats.hpp"

namespace mprobe {

struct TestFunction {
  enum class Tag { Identity, Square, Custom };
  Tag tag = Tag::Identity;
  std::function<double(double)> custom;  // Tag::Custom only
  std::string custom_label;

  static TestFunction identity();
  static TestFunction square();
  static TestFunction make_custom(std::string label, std::function<double(double)> fn);

  double operator()(double z) const;
  std::string label() const;  // "z", "z^2", or the custom label
};

TestFunction test_function_from_string(const std::string& name);

enum class MleFamily { Bernoulli, GaussianKnownVariance };

MleFamily mle_family_for(TaskKind kind);

// Sum over retained paths of per-path half-differences, divided by the
// total number of difference terms. For uniform-length ensembles this is
// exactly (2/(Jm)) sum_j sum_{i<=m/2} (g(z_i) - g(z_{i+m/2})) with J the
// retained count; split ensembles use each path's even-truncated length.
double t1(const PathEnsemble& ensemble, const TestFunction& g);

// (1/(J m)) sum_j sum_{i=1}^{m-k-1} (z_{i+1} - z_{i+k}) z_i for uniform
// ensembles; split ensembles divide by the total retained sample count.
// k = 1 is rejected (the summand is identically zero).
double t2(const PathEnsemble& ensemble, int k);

// Closed-form MLE: the sample mean for both supported families.
double mle(std::span<const Sample> values, MleFamily family);

// IQR of per-retained-path MLEs; requires at least 4 retained paths.
double t3(const PathEnsemble& ensemble, MleFamily family);

// Half-width 0.1/n of the acceptable deviation band around a CI.
double acceptable_band(int n);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  int replicates = 0;
};

// Which statistic to evaluate, and on which side of the per-x split.
struct StatisticSpec {
  enum class Type { T1, T2, T3 };
  enum class Side { Whole, X0, X1 };

  Type type = Type::T1;
  TestFunction g;                            // T1
  int k = 2;                                 // T2
  MleFamily family = MleFamily::Bernoulli;   // T3
  Side side = Side::Whole;

  static StatisticSpec t1_spec(TestFunction g, Side side = Side::Whole);
  static StatisticSpec t2_spec(int k, Side side = Side::Whole);
  static StatisticSpec t3_spec(MleFamily family);

  std::string name() const;     // "T1" | "T2" | "T3"
  std::string variant() const;  // "g=z", "k=3", "g=z,x=1", ...
  double evaluate(const PathEnsemble& filtered) const;
};

// Empirical (alpha/2, 1-alpha/2) type-7 quantiles of replicate values.
// Requires at least 20 replicates.
ConfidenceInterval ci_from_replicates(std::vector<double> replicates, double level);

// K reference-model ensembles conditioned on `observed` under the given
// protocol, each passed through the outlier filter, evaluated on every
// statistic. Returns replicate values indexed [statistic][replicate].
// Replicate k uses ensemble seed mix_seed(bootstrap_seed, k).
std::vector<std::vector<double>> bootstrap_statistics(const SequentialPredictiveModel& reference,
                                                      const ObservedDataset& observed,
                                                      const SamplingProtocol& protocol,
                                                      std::span<const StatisticSpec> statistics,
                                                      int num_replicates,
                                                      std::uint64_t bootstrap_seed, int jobs = 1);

ConfidenceInterval bootstrap_ci(const SequentialPredictiveModel& reference,
                                const ObservedDataset& observed, const SamplingProtocol& protocol,
                                const StatisticSpec& statistic, int num_replicates, double level,
                                std::uint64_t bootstrap_seed, int jobs = 1);

enum class Verdict { Pass, PassWithinBand, Fail };

std::string to_string(Verdict verdict);

struct RunMeta {
  std::string task;
  std::string model;
  int n = 0;
  int m = 0;
  int num_paths = 0;       // J
  int retained_paths = 0;
};

struct ObservedStatistic {
  std::string name;
  std::string variant;
  double value = 0.0;
  RunMeta meta;
};

struct BootstrapCi {
  std::string name;
  std::string variant;
  ConfidenceInterval ci;
  int n = 0;
  int m = 0;
  int num_paths = 0;
};

struct DiagnosticResult {
  std::string statistic;
  std::string variant;
  double observed = 0.0;
  ConfidenceInterval ci;
  double band_halfwidth = 0.0;
  Verdict verdict = Verdict::Pass;
  RunMeta meta;
};

// Pass inside the CI; PassWithinBand within band_halfwidth outside it;
// Fail otherwise. Throws if the statistic identities or (n, m, J) differ.
DiagnosticResult run_check(const ObservedStatistic& observed, const BootstrapCi& ci,
                           double band_halfwidth);

// Per-path MLEs of a fixed-ordering ensemble: approximate draws from the
// martingale posterior. No outlier filter is applied here.
std::vector<double> martingale_posterior_samples(const SequentialPredictiveModel& model,
                                                 const ObservedDataset& observed, int path_length,
                                                 int num_paths, MleFamily family,
                                                 std::uint64_t ensemble_seed, int jobs = 1);

struct ScalingPoint {
  int n = 0;
  int m = 0;
  double median_t3 = 0.0;
  double t3_q25 = 0.0;  // spread of T3 across the independent runs
  double t3_q75 = 0.0;
};

// For each n: a fresh dataset of size n (seed derived from (seed, n)
// only, so different models see identical data), `runs` independent
// fixed-ordering ensembles with m = n/2, the 1.5x IQR filter, T3 per run,
// and the median across runs.
std::vector<ScalingPoint> scaling_experiment(const SequentialPredictiveModel& model,
                                             const TaskSpec& task, std::span<const int> n_grid,
                                             int num_paths, int runs, std::uint64_t seed,
                                             int jobs = 1);

double scaling_slope(std::span<const ScalingPoint> curve);

struct Fact3Result {
  double lhs = 0.0;                // mean posterior variance
  double rhs = 0.0;                // mean squared estimation error
  double mc_standard_error = 0.0;  // SE of the paired difference rhs - lhs
  int num_mc = 0;
};

// Monte Carlo check that the mean posterior variance equals the mean
// squared error of the posterior mean when data are drawn from the prior
// predictive. Closed-form posterior moments inside each replicate.
Fact3Result fact3_check(const BetaParams& prior, int n, int num_mc, RngStream& rng);
Fact3Result fact3_check(const GaussianPriorParams& prior, int n, int num_mc, RngStream& rng);

}  // namespace mprobe
