#pragma once

// Sequential predictive models. The conjugate references are the exact
// Bayesian posterior predictives used to bootstrap confidence intervals;
// the fractional posterior and the drifting negative control are the
// calibrated departures from them. Everything here is a pure function of
// (parameters, context); generation state is threaded explicitly.

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mprobe/rng.hpp"
#include "mprobe/sample.hpp"

namespace mprobe {

struct BernoulliPred {
  double p1 = 0.5;  // P(Z = 1)
};

struct GaussianPred {
  double mean = 0.0;
  double variance = 1.0;
};

struct PairPred {
  double p_x1 = 0.5;
  double p_y1_given_x0 = 0.5;
  double p_y1_given_x1 = 0.5;
};

using PredictiveDistribution = std::variant<BernoulliPred, GaussianPred, PairPred>;

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
  void validate() const;
  double mean() const { return a / (a + b); }
  double variance() const { return a * b / ((a + b) * (a + b) * (a + b + 1.0)); }
};

// Normal prior on the mean of a unit-variance Gaussian likelihood.
struct GaussianPriorParams {
  double mean = 0.0;
  double variance = 100.0;
  void validate() const;
};

// Per-generated-step shift of the predictive mean; reproduces the
// continual-bias failure mode as a negative control.
struct DriftSpec {
  double delta = 0.005;
  int direction = +1;  // +1 or -1
  void validate() const;
};

// --- Exact predictive rules -------------------------------------------

// p1 = (a + ones) / (a + b + n).
PredictiveDistribution beta_bernoulli_from_counts(const BetaParams& prior, long n, long ones);
PredictiveDistribution beta_bernoulli_predictive(const BetaParams& prior,
                                                 std::span<const Sample> context);

// Posterior mean (mu0/s0 + sum) / (1/s0 + n); predictive variance 1 + posterior variance.
PredictiveDistribution gaussian_from_stats(const GaussianPriorParams& prior, long n, double sum);
PredictiveDistribution gaussian_predictive(const GaussianPriorParams& prior,
                                           std::span<const Sample> context);

// Tempered likelihood: p1 = (a + alpha*ones) / (a + b + alpha*n), alpha in (0, 1].
PredictiveDistribution fractional_bernoulli_from_counts(const BetaParams& prior, double alpha,
                                                        long n, long ones);
PredictiveDistribution fractional_bernoulli_predictive(const BetaParams& prior, double alpha,
                                                       std::span<const Sample> context);

// p1 = clamp(beta_bernoulli p1 + direction*delta*generated_count, 0, 1).
// generated_count is the number of model-generated samples already
// present at the end of the context.
PredictiveDistribution drift_from_counts(const BetaParams& prior, const DriftSpec& drift, long n,
                                         long ones, long generated_count);
PredictiveDistribution drift_predictive(const BetaParams& prior, const DriftSpec& drift,
                                        std::span<const Sample> context, long generated_count);

// Three independent Beta-Bernoulli updates: the x marginal, y | x = 0 and
// y | x = 1 subsequences.
struct NlCounts {
  long n = 0;
  long x1 = 0;
  long n_x0 = 0;
  long y1_x0 = 0;
  long n_x1 = 0;
  long y1_x1 = 0;
  void add(const Sample& s);
};
PredictiveDistribution nl_reference_from_counts(const BetaParams& prior_x,
                                                const BetaParams& prior_y0,
                                                const BetaParams& prior_y1, const NlCounts& counts);
PredictiveDistribution nl_reference_predictive(const BetaParams& prior_x,
                                               const BetaParams& prior_y0,
                                               const BetaParams& prior_y1,
                                               std::span<const Sample> context);

// Draws one sample. Real draws are quantized to one decimal after
// sampling; pair draws take x first, then y | x.
Sample sample_from(const PredictiveDistribution& pred, RngStream& rng);

TaskKind task_kind_of(const PredictiveDistribution& pred);

// --- Model interface ----------------------------------------------------

// Anything that can extend an observed dataset autoregressively. Local
// models do it by exact predict-then-sample steps; the remote adapter in
// llm_client.hpp does it over HTTP.
class SequentialPredictiveModel {
 public:
  virtual ~SequentialPredictiveModel() = default;
  virtual TaskKind kind() const = 0;
  virtual std::string name() const = 0;
  virtual std::vector<Sample> sample_path(std::span<const Sample> observed, int length,
                                          RngStream& rng) const = 0;
};

// Local models expose the one-step predictive exactly. Incremental
// sufficient-statistic state keeps autoregressive generation O(1) per
// step; predict() and sample_path() share the same state type, so they
// cannot drift apart.
class LocalPredictiveModel : public SequentialPredictiveModel {
 public:
  class State {
   public:
    virtual ~State() = default;
    virtual PredictiveDistribution predict() const = 0;
    // Conditioning on an observed sample.
    virtual void observe(const Sample& s) = 0;
    // Appending a model-generated sample; defaults to observe().
    virtual void advance(const Sample& s) { observe(s); }
  };

  virtual std::unique_ptr<State> start(std::span<const Sample> observed) const = 0;

  PredictiveDistribution predict(std::span<const Sample> observed,
                                 std::span<const Sample> generated) const;

  std::vector<Sample> sample_path(std::span<const Sample> observed, int length,
                                  RngStream& rng) const override;
};

class BetaBernoulliModel final : public LocalPredictiveModel {
 public:
  explicit BetaBernoulliModel(BetaParams prior = {});
  TaskKind kind() const override { return TaskKind::Bernoulli; }
  std::string name() const override;
  std::unique_ptr<State> start(std::span<const Sample> observed) const override;
  const BetaParams& prior() const { return prior_; }

 private:
  BetaParams prior_;
};

// Tempered-likelihood posterior over the observed data; its own
// generations condition at full weight, so path ensembles carry the
// inflated 1/(alpha n) epistemic spread.
class FractionalBernoulliModel final : public LocalPredictiveModel {
 public:
  FractionalBernoulliModel(BetaParams prior, double alpha);
  TaskKind kind() const override { return TaskKind::Bernoulli; }
  std::string name() const override;
  std::unique_ptr<State> start(std::span<const Sample> observed) const override;
  double alpha() const { return alpha_; }

 private:
  BetaParams prior_;
  double alpha_;
};

class DriftBernoulliModel final : public LocalPredictiveModel {
 public:
  DriftBernoulliModel(BetaParams prior, DriftSpec drift);
  TaskKind kind() const override { return TaskKind::Bernoulli; }
  std::string name() const override;
  std::unique_ptr<State> start(std::span<const Sample> observed) const override;

 private:
  BetaParams prior_;
  DriftSpec drift_;
};

class GaussianConjugateModel final : public LocalPredictiveModel {
 public:
  explicit GaussianConjugateModel(GaussianPriorParams prior = {});
  TaskKind kind() const override { return TaskKind::Gaussian; }
  std::string name() const override;
  std::unique_ptr<State> start(std::span<const Sample> observed) const override;

 private:
  GaussianPriorParams prior_;
};

class NlReferenceModel final : public LocalPredictiveModel {
 public:
  NlReferenceModel(BetaParams prior_x = {}, BetaParams prior_y0 = {}, BetaParams prior_y1 = {});
  TaskKind kind() const override { return TaskKind::NaturalLanguage; }
  std::string name() const override;
  std::unique_ptr<State> start(std::span<const Sample> observed) const override;

 private:
  BetaParams prior_x_, prior_y0_, prior_y1_;
};

}  // namespace mprobe
