#include "mprobe/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mprobe {

namespace {

void require_binary(std::span<const Sample> context) {
  for (const Sample& s : context)
    if (s.type() != Sample::Type::Binary)
      throw std::invalid_argument("context must contain only binary samples");
}

long count_ones(std::span<const Sample> context) {
  long ones = 0;
  for (const Sample& s : context) ones += s.binary_value();
  return ones;
}

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

}  // namespace

void BetaParams::validate() const {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta parameters must be positive");
}

void GaussianPriorParams::validate() const {
  if (!(variance > 0.0)) throw std::invalid_argument("prior variance must be positive");
  if (!std::isfinite(mean)) throw std::invalid_argument("prior mean must be finite");
}

void DriftSpec::validate() const {
  if (direction != 1 && direction != -1) throw std::invalid_argument("drift direction must be +1 or -1");
  if (!(std::abs(delta) < 1.0)) throw std::invalid_argument("|drift delta| must be below 1");
}

PredictiveDistribution beta_bernoulli_from_counts(const BetaParams& prior, long n, long ones) {
  prior.validate();
  return BernoulliPred{(prior.a + static_cast<double>(ones)) /
                       (prior.a + prior.b + static_cast<double>(n))};
}

PredictiveDistribution beta_bernoulli_predictive(const BetaParams& prior,
                                                 std::span<const Sample> context) {
  require_binary(context);
  return beta_bernoulli_from_counts(prior, static_cast<long>(context.size()), count_ones(context));
}

PredictiveDistribution gaussian_from_stats(const GaussianPriorParams& prior, long n, double sum) {
  prior.validate();
  const double precision = 1.0 / prior.variance + static_cast<double>(n);
  const double posterior_mean = (prior.mean / prior.variance + sum) / precision;
  const double posterior_variance = 1.0 / precision;
  return GaussianPred{posterior_mean, 1.0 + posterior_variance};
}

PredictiveDistribution gaussian_predictive(const GaussianPriorParams& prior,
                                           std::span<const Sample> context) {
  // Samples are tenth-quantized, so the sum is exact (and therefore
  // permutation invariant) when accumulated in integer tenths.
  long long tenths = 0;
  for (const Sample& s : context) {
    if (s.type() != Sample::Type::Real)
      throw std::invalid_argument("context must contain only real samples");
    tenths += std::llround(s.real_value() * 10.0);
  }
  return gaussian_from_stats(prior, static_cast<long>(context.size()),
                             static_cast<double>(tenths) / 10.0);
}

PredictiveDistribution fractional_bernoulli_from_counts(const BetaParams& prior, double alpha,
                                                        long n, long ones) {
  prior.validate();
  if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("alpha must lie in (0,1]");
  return BernoulliPred{(prior.a + alpha * static_cast<double>(ones)) /
                       (prior.a + prior.b + alpha * static_cast<double>(n))};
}

PredictiveDistribution fractional_bernoulli_predictive(const BetaParams& prior, double alpha,
                                                       std::span<const Sample> context) {
  require_binary(context);
  return fractional_bernoulli_from_counts(prior, alpha, static_cast<long>(context.size()),
                                          count_ones(context));
}

PredictiveDistribution drift_from_counts(const BetaParams& prior, const DriftSpec& drift, long n,
                                         long ones, long generated_count) {
  drift.validate();
  if (generated_count < 0) throw std::invalid_argument("generated_count must be non-negative");
  const double base = std::get<BernoulliPred>(beta_bernoulli_from_counts(prior, n, ones)).p1;
  const double shift = static_cast<double>(drift.direction) * drift.delta *
                       static_cast<double>(generated_count);
  return BernoulliPred{clamp01(base + shift)};
}

PredictiveDistribution drift_predictive(const BetaParams& prior, const DriftSpec& drift,
                                        std::span<const Sample> context, long generated_count) {
  require_binary(context);
  return drift_from_counts(prior, drift, static_cast<long>(context.size()), count_ones(context),
                           generated_count);
}

void NlCounts::add(const Sample& s) {
  if (s.type() != Sample::Type::Pair)
    throw std::invalid_argument("context must contain only pair samples");
  ++n;
  if (s.pair_x() == 1) {
    ++x1;
    ++n_x1;
    y1_x1 += s.pair_y();
  } else {
    ++n_x0;
    y1_x0 += s.pair_y();
  }
}

PredictiveDistribution nl_reference_from_counts(const BetaParams& prior_x,
                                                const BetaParams& prior_y0,
                                                const BetaParams& prior_y1,
                                                const NlCounts& counts) {
  const auto p = [](const BetaParams& prior, long n, long ones) {
    return std::get<BernoulliPred>(beta_bernoulli_from_counts(prior, n, ones)).p1;
  };
  return PairPred{p(prior_x, counts.n, counts.x1), p(prior_y0, counts.n_x0, counts.y1_x0),
                  p(prior_y1, counts.n_x1, counts.y1_x1)};
}

PredictiveDistribution nl_reference_predictive(const BetaParams& prior_x,
                                               const BetaParams& prior_y0,
                                               const BetaParams& prior_y1,
                                               std::span<const Sample> context) {
  NlCounts counts;
  for (const Sample& s : context) counts.add(s);
  return nl_reference_from_counts(prior_x, prior_y0, prior_y1, counts);
}

Sample sample_from(const PredictiveDistribution& pred, RngStream& rng) {
  if (const auto* bern = std::get_if<BernoulliPred>(&pred))
    return Sample::binary(rng.bernoulli(bern->p1) ? 1 : 0);
  if (const auto* gauss = std::get_if<GaussianPred>(&pred)) {
    const double draw = rng.normal(gauss->mean, std::sqrt(gauss->variance));
    return Sample::real(quantize_tenths(draw));
  }
  const auto& pair = std::get<PairPred>(pred);
  const int x = rng.bernoulli(pair.p_x1) ? 1 : 0;
  const double py = x == 1 ? pair.p_y1_given_x1 : pair.p_y1_given_x0;
  const int y = rng.bernoulli(py) ? 1 : 0;
  return Sample::pair(x, y);
}

TaskKind task_kind_of(const PredictiveDistribution& pred) {
  if (std::holds_alternative<BernoulliPred>(pred)) return TaskKind::Bernoulli;
  if (std::holds_alternative<GaussianPred>(pred)) return TaskKind::Gaussian;
  return TaskKind::NaturalLanguage;
}

PredictiveDistribution LocalPredictiveModel::predict(std::span<const Sample> observed,
                                                     std::span<const Sample> generated) const {
  auto state = start(observed);
  for (const Sample& s : generated) state->advance(s);
  return state->predict();
}

std::vector<Sample> LocalPredictiveModel::sample_path(std::span<const Sample> observed, int length,
                                                      RngStream& rng) const {
  if (length < 0) throw std::invalid_argument("path length must be non-negative");
  auto state = start(observed);
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    Sample s = sample_from(state->predict(), rng);
    state->advance(s);
    out.push_back(s);
  }
  return out;
}

namespace {

struct BetaBernoulliState final : LocalPredictiveModel::State {
  BetaParams prior;
  long n = 0;
  long ones = 0;
  PredictiveDistribution predict() const override {
    return beta_bernoulli_from_counts(prior, n, ones);
  }
  void observe(const Sample& s) override {
    if (s.type() != Sample::Type::Binary)
      throw std::invalid_argument("context must contain only binary samples");
    ++n;
    ones += s.binary_value();
  }
};

// Observed samples enter at weight alpha; the model's own generations
// update at full weight (they are draws from the tempered posterior's
// predictive, not data to be tempered again). This keeps the mixing
// distribution at Beta(a + alpha*s, b + alpha*(n - s)) and with it the
// 1/(alpha n) epistemic spread.
struct FractionalState final : LocalPredictiveModel::State {
  BetaParams prior;
  double alpha = 1.0;
  long observed_n = 0;
  long observed_ones = 0;
  long generated_n = 0;
  long generated_ones = 0;
  PredictiveDistribution predict() const override {
    const double a = prior.a + alpha * static_cast<double>(observed_ones) +
                     static_cast<double>(generated_ones);
    const double total = prior.a + prior.b + alpha * static_cast<double>(observed_n) +
                         static_cast<double>(generated_n);
    return BernoulliPred{a / total};
  }
  void observe(const Sample& s) override {
    if (s.type() != Sample::Type::Binary)
      throw std::invalid_argument("context must contain only binary samples");
    ++observed_n;
    observed_ones += s.binary_value();
  }
  void advance(const Sample& s) override {
    if (s.type() != Sample::Type::Binary)
      throw std::invalid_argument("context must contain only binary samples");
    ++generated_n;
    generated_ones += s.binary_value();
  }
};

struct DriftState final : LocalPredictiveModel::State {
  BetaParams prior;
  DriftSpec drift;
  long n = 0;
  long ones = 0;
  long generated = 0;
  PredictiveDistribution predict() const override {
    return drift_from_counts(prior, drift, n, ones, generated);
  }
  void observe(const Sample& s) override {
    if (s.type() != Sample::Type::Binary)
      throw std::invalid_argument("context must contain only binary samples");
    ++n;
    ones += s.binary_value();
  }
  void advance(const Sample& s) override {
    observe(s);
    ++generated;
  }
};

struct GaussianState final : LocalPredictiveModel::State {
  GaussianPriorParams prior;
  long n = 0;
  long long sum_tenths = 0;  // exact integer accumulation of quantized reals
  PredictiveDistribution predict() const override {
    return gaussian_from_stats(prior, n, static_cast<double>(sum_tenths) / 10.0);
  }
  void observe(const Sample& s) override {
    if (s.type() != Sample::Type::Real)
      throw std::invalid_argument("context must contain only real samples");
    ++n;
    sum_tenths += std::llround(s.real_value() * 10.0);
  }
};

struct NlState final : LocalPredictiveModel::State {
  BetaParams prior_x, prior_y0, prior_y1;
  NlCounts counts;
  PredictiveDistribution predict() const override {
    return nl_reference_from_counts(prior_x, prior_y0, prior_y1, counts);
  }
  void observe(const Sample& s) override { counts.add(s); }
};

template <typename StateT>
std::unique_ptr<LocalPredictiveModel::State> feed(std::unique_ptr<StateT> state,
                                                  std::span<const Sample> observed) {
  for (const Sample& s : observed) state->observe(s);
  return state;
}

}  // namespace

BetaBernoulliModel::BetaBernoulliModel(BetaParams prior) : prior_(prior) { prior_.validate(); }

std::string BetaBernoulliModel::name() const {
  std::ostringstream os;
  os << "beta_bernoulli(" << prior_.a << "," << prior_.b << ")";
  return os.str();
}

std::unique_ptr<LocalPredictiveModel::State> BetaBernoulliModel::start(
    std::span<const Sample> observed) const {
  auto state = std::make_unique<BetaBernoulliState>();
  state->prior = prior_;
  return feed(std::move(state), observed);
}

FractionalBernoulliModel::FractionalBernoulliModel(BetaParams prior, double alpha)
    : prior_(prior), alpha_(alpha) {
  prior_.validate();
  if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("alpha must lie in (0,1]");
}

std::string FractionalBernoulliModel::name() const {
  std::ostringstream os;
  os << "fractional_bernoulli(alpha=" << alpha_ << ")";
  return os.str();
}

std::unique_ptr<LocalPredictiveModel::State> FractionalBernoulliModel::start(
    std::span<const Sample> observed) const {
  auto state = std::make_unique<FractionalState>();
  state->prior = prior_;
  state->alpha = alpha_;
  return feed(std::move(state), observed);
}

DriftBernoulliModel::DriftBernoulliModel(BetaParams prior, DriftSpec drift)
    : prior_(prior), drift_(drift) {
  prior_.validate();
  drift_.validate();
}

std::string DriftBernoulliModel::name() const {
  std::ostringstream os;
  os << "drift(delta=" << drift_.delta * drift_.direction << ")";
  return os.str();
}

std::unique_ptr<LocalPredictiveModel::State> DriftBernoulliModel::start(
    std::span<const Sample> observed) const {
  auto state = std::make_unique<DriftState>();
  state->prior = prior_;
  state->drift = drift_;
  return feed(std::move(state), observed);
}

GaussianConjugateModel::GaussianConjugateModel(GaussianPriorParams prior) : prior_(prior) {
  prior_.validate();
}

std::string GaussianConjugateModel::name() const {
  std::ostringstream os;
  os << "gaussian_conjugate(" << prior_.mean << "," << prior_.variance << ")";
  return os.str();
}

std::unique_ptr<LocalPredictiveModel::State> GaussianConjugateModel::start(
    std::span<const Sample> observed) const {
  auto state = std::make_unique<GaussianState>();
  state->prior = prior_;
  return feed(std::move(state), observed);
}

NlReferenceModel::NlReferenceModel(BetaParams prior_x, BetaParams prior_y0, BetaParams prior_y1)
    : prior_x_(prior_x), prior_y0_(prior_y0), prior_y1_(prior_y1) {
  prior_x_.validate();
  prior_y0_.validate();
  prior_y1_.validate();
}

std::string NlReferenceModel::name() const { return "nl_reference"; }

std::unique_ptr<LocalPredictiveModel::State> NlReferenceModel::start(
    std::span<const Sample> observed) const {
  auto state = std::make_unique<NlState>();
  state->prior_x = prior_x_;
  state->prior_y0 = prior_y0_;
  state->prior_y1 = prior_y1_;
  return feed(std::move(state), observed);
}

}  // namespace mprobe
