#include "mprobe/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mprobe/data_gen.hpp"
#include "mprobe/parallel.hpp"

namespace mprobe {

namespace {

constexpr std::uint64_t kScalingDataTag = 0x5343414C44415441ULL;   // "SCALDATA"
constexpr std::uint64_t kScalingRunTag = 0x5343414C52554E00ULL;    // "SCALRUN"

void require_scalar_ensemble(const PathEnsemble& ensemble) {
  if (ensemble.kind == TaskKind::NaturalLanguage)
    throw std::invalid_argument("statistic requires binary or real values; split pair ensembles by x first");
}

}  // namespace

TestFunction TestFunction::identity() { return TestFunction{Tag::Identity, nullptr, ""}; }

TestFunction TestFunction::square() { return TestFunction{Tag::Square, nullptr, ""}; }

TestFunction TestFunction::make_custom(std::string label, std::function<double(double)> fn) {
  if (!fn) throw std::invalid_argument("custom test function must be callable");
  return TestFunction{Tag::Custom, std::move(fn), std::move(label)};
}

double TestFunction::operator()(double z) const {
  switch (tag) {
    case Tag::Identity: return z;
    case Tag::Square: return z * z;
    case Tag::Custom: return custom(z);
  }
  throw std::logic_error("unreachable test function tag");
}

std::string TestFunction::label() const {
  switch (tag) {
    case Tag::Identity: return "z";
    case Tag::Square: return "z^2";
    case Tag::Custom: return custom_label;
  }
  throw std::logic_error("unreachable test function tag");
}

TestFunction test_function_from_string(const std::string& name) {
  if (name == "z" || name == "identity") return TestFunction::identity();
  if (name == "z2" || name == "z^2" || name == "square") return TestFunction::square();
  throw std::invalid_argument("unknown test function: " + name);
}

MleFamily mle_family_for(TaskKind kind) {
  switch (kind) {
    case TaskKind::Bernoulli: return MleFamily::Bernoulli;
    case TaskKind::Gaussian: return MleFamily::GaussianKnownVariance;
    case TaskKind::NaturalLanguage:
      throw std::invalid_argument("no scalar MLE family for the language task");
  }
  throw std::logic_error("unreachable task kind");
}

double t1(const PathEnsemble& ensemble, const TestFunction& g) {
  require_scalar_ensemble(ensemble);
  if (!ensemble.variable_length && ensemble.nominal_length % 2 != 0)
    throw std::invalid_argument("t1 requires an even path length");

  double sum = 0.0;
  long terms = 0;
  bool any_retained = false;
  for (std::size_t p = 0; p < ensemble.paths.size(); ++p) {
    if (!ensemble.retained[p]) continue;
    any_retained = true;
    const auto& v = ensemble.paths[p].values;
    const std::size_t even_len = v.size() - (v.size() % 2);
    const std::size_t half = even_len / 2;
    for (std::size_t i = 0; i < half; ++i) sum += g(v[i].scalar()) - g(v[i + half].scalar());
    terms += static_cast<long>(half);
  }
  if (!any_retained) throw std::invalid_argument("t1 requires at least one retained path");
  if (terms == 0) throw std::invalid_argument("t1 has no difference terms (paths too short)");
  return sum / static_cast<double>(terms);
}

double t2(const PathEnsemble& ensemble, int k) {
  require_scalar_ensemble(ensemble);
  if (k < 2) throw std::invalid_argument("t2 requires k >= 2 (k = 1 is identically zero)");
  if (!ensemble.variable_length && ensemble.nominal_length < k + 2)
    throw std::invalid_argument("t2 requires m >= k + 2");

  double sum = 0.0;
  long samples = 0;
  long terms = 0;
  for (std::size_t p = 0; p < ensemble.paths.size(); ++p) {
    if (!ensemble.retained[p]) continue;
    const auto& v = ensemble.paths[p].values;
    const long len = static_cast<long>(v.size());
    samples += len;
    // 1-based i runs to m - k - 1, i.e. 0-based i to m - k - 2.
    for (long i = 0; i <= len - k - 2; ++i) {
      sum += (v[static_cast<std::size_t>(i + 1)].scalar() -
              v[static_cast<std::size_t>(i + k)].scalar()) *
             v[static_cast<std::size_t>(i)].scalar();
      ++terms;
    }
  }
  if (samples == 0) throw std::invalid_argument("t2 requires at least one retained sample");
  if (terms == 0) throw std::invalid_argument("t2 has no terms (paths too short for this k)");
  return sum / static_cast<double>(samples);
}

double mle(std::span<const Sample> values, MleFamily family) {
  if (values.empty()) throw std::invalid_argument("mle requires a non-empty path");
  double sum = 0.0;
  for (const Sample& s : values) {
    switch (family) {
      case MleFamily::Bernoulli:
        sum += static_cast<double>(s.binary_value());
        break;
      case MleFamily::GaussianKnownVariance:
        sum += s.real_value();
        break;
    }
  }
  return sum / static_cast<double>(values.size());
}

double t3(const PathEnsemble& ensemble, MleFamily family) {
  std::vector<double> estimates;
  estimates.reserve(ensemble.paths.size());
  for (std::size_t p = 0; p < ensemble.paths.size(); ++p) {
    if (!ensemble.retained[p]) continue;
    if (ensemble.paths[p].values.empty()) continue;
    estimates.push_back(mle(ensemble.paths[p].values, family));
  }
  if (estimates.size() < 4) throw std::invalid_argument("t3 requires at least 4 retained paths");
  return iqr(estimates);
}

double acceptable_band(int n) {
  if (n < 1) throw std::invalid_argument("band requires n >= 1");
  return 0.1 / static_cast<double>(n);
}

StatisticSpec StatisticSpec::t1_spec(TestFunction g, Side side) {
  StatisticSpec spec;
  spec.type = Type::T1;
  spec.g = std::move(g);
  spec.side = side;
  return spec;
}

StatisticSpec StatisticSpec::t2_spec(int k, Side side) {
  StatisticSpec spec;
  spec.type = Type::T2;
  spec.k = k;
  spec.side = side;
  return spec;
}

StatisticSpec StatisticSpec::t3_spec(MleFamily family) {
  StatisticSpec spec;
  spec.type = Type::T3;
  spec.family = family;
  return spec;
}

std::string StatisticSpec::name() const {
  switch (type) {
    case Type::T1: return "T1";
    case Type::T2: return "T2";
    case Type::T3: return "T3";
  }
  throw std::logic_error("unreachable statistic type");
}

std::string StatisticSpec::variant() const {
  std::string out;
  switch (type) {
    case Type::T1: out = "g=" + g.label(); break;
    case Type::T2: out = "k=" + std::to_string(k); break;
    case Type::T3: out = family == MleFamily::Bernoulli ? "mle=bernoulli" : "mle=gaussian"; break;
  }
  if (side == Side::X0) out += ",x=0";
  if (side == Side::X1) out += ",x=1";
  return out;
}

double StatisticSpec::evaluate(const PathEnsemble& filtered) const {
  const PathEnsemble* target = &filtered;
  PathEnsemble side_ensemble;
  if (side != Side::Whole) {
    auto [side0, side1] = split_ensemble_by_x(filtered);
    side_ensemble = side == Side::X0 ? std::move(side0) : std::move(side1);
    target = &side_ensemble;
  }
  switch (type) {
    case Type::T1: return t1(*target, g);
    case Type::T2: return t2(*target, k);
    case Type::T3: return t3(*target, family);
  }
  throw std::logic_error("unreachable statistic type");
}

ConfidenceInterval ci_from_replicates(std::vector<double> replicates, double level) {
  if (replicates.size() < 20)
    throw std::invalid_argument("too few replicates for the requested level");
  if (!(level > 0.0) || !(level < 1.0))
    throw std::invalid_argument("confidence level must lie in (0,1)");
  std::sort(replicates.begin(), replicates.end());
  const double alpha = 1.0 - level;
  ConfidenceInterval ci;
  ci.lower = quantile_sorted(replicates, alpha / 2.0);
  ci.upper = quantile_sorted(replicates, 1.0 - alpha / 2.0);
  ci.level = level;
  ci.replicates = static_cast<int>(replicates.size());
  return ci;
}

std::vector<std::vector<double>> bootstrap_statistics(const SequentialPredictiveModel& reference,
                                                      const ObservedDataset& observed,
                                                      const SamplingProtocol& protocol,
                                                      std::span<const StatisticSpec> statistics,
                                                      int num_replicates,
                                                      std::uint64_t bootstrap_seed, int jobs) {
  if (num_replicates < 20)
    throw std::invalid_argument("too few replicates for the requested level");
  if (statistics.empty()) throw std::invalid_argument("no statistics requested");

  std::vector<std::vector<double>> values(statistics.size(),
                                          std::vector<double>(static_cast<std::size_t>(num_replicates)));
  parallel_for(num_replicates, jobs, [&](int r) {
    SamplingProtocol replicate_protocol = protocol;
    replicate_protocol.ensemble_seed = mix_seed(bootstrap_seed, static_cast<std::uint64_t>(r));
    PathEnsemble ensemble = generate_ensemble(reference, replicate_protocol, observed, 1);
    if (ensemble.paths.size() >= 4) ensemble = filter_outlier_paths(ensemble);
    for (std::size_t s = 0; s < statistics.size(); ++s)
      values[s][static_cast<std::size_t>(r)] = statistics[s].evaluate(ensemble);
  });
  return values;
}

ConfidenceInterval bootstrap_ci(const SequentialPredictiveModel& reference,
                                const ObservedDataset& observed, const SamplingProtocol& protocol,
                                const StatisticSpec& statistic, int num_replicates, double level,
                                std::uint64_t bootstrap_seed, int jobs) {
  const StatisticSpec specs[] = {statistic};
  auto values = bootstrap_statistics(reference, observed, protocol, specs, num_replicates,
                                     bootstrap_seed, jobs);
  return ci_from_replicates(std::move(values[0]), level);
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Pass: return "pass";
    case Verdict::PassWithinBand: return "pass_within_band";
    case Verdict::Fail: return "fail";
  }
  throw std::logic_error("unreachable verdict");
}

DiagnosticResult run_check(const ObservedStatistic& observed, const BootstrapCi& ci,
                           double band_halfwidth) {
  if (observed.name != ci.name || observed.variant != ci.variant)
    throw std::invalid_argument("statistic identity mismatch between observed value and CI");
  if (observed.meta.n != ci.n || observed.meta.m != ci.m || observed.meta.num_paths != ci.num_paths)
    throw std::invalid_argument("run metadata mismatch between observed value and CI");
  if (!(band_halfwidth >= 0.0)) throw std::invalid_argument("band half-width must be non-negative");

  DiagnosticResult result;
  result.statistic = observed.name;
  result.variant = observed.variant;
  result.observed = observed.value;
  result.ci = ci.ci;
  result.band_halfwidth = band_halfwidth;
  result.meta = observed.meta;
  if (observed.value >= ci.ci.lower && observed.value <= ci.ci.upper)
    result.verdict = Verdict::Pass;
  else if (observed.value >= ci.ci.lower - band_halfwidth &&
           observed.value <= ci.ci.upper + band_halfwidth)
    result.verdict = Verdict::PassWithinBand;
  else
    result.verdict = Verdict::Fail;
  return result;
}

std::vector<double> martingale_posterior_samples(const SequentialPredictiveModel& model,
                                                 const ObservedDataset& observed, int path_length,
                                                 int num_paths, MleFamily family,
                                                 std::uint64_t ensemble_seed, int jobs) {
  SamplingProtocol protocol;
  protocol.ordering = Ordering::FixedOrdering;
  protocol.num_paths = num_paths;
  protocol.path_length = path_length;
  protocol.ensemble_seed = ensemble_seed;
  const PathEnsemble ensemble = generate_ensemble(model, protocol, observed, jobs);
  std::vector<double> estimates;
  estimates.reserve(ensemble.paths.size());
  for (const SamplePath& path : ensemble.paths) estimates.push_back(mle(path.values, family));
  return estimates;
}

std::vector<ScalingPoint> scaling_experiment(const SequentialPredictiveModel& model,
                                             const TaskSpec& task, std::span<const int> n_grid,
                                             int num_paths, int runs, std::uint64_t seed,
                                             int jobs) {
  if (n_grid.size() < 3) throw std::invalid_argument("scaling requires at least 3 grid points");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()))
    throw std::invalid_argument("scaling grid must be sorted ascending");
  if (runs < 1) throw std::invalid_argument("scaling requires at least one run");
  const MleFamily family = mle_family_for(task.kind);

  std::vector<ScalingPoint> curve(n_grid.size());
  const int total = static_cast<int>(n_grid.size()) * runs;
  std::vector<std::vector<double>> t3_values(n_grid.size(),
                                             std::vector<double>(static_cast<std::size_t>(runs)));
  // Dataset seeds depend on (seed, n) only, so every model conditions on
  // identical data; ensemble seeds are salted by the model name so that
  // different models do not draw coupled uniforms.
  const std::uint64_t model_salt = hash64(model.name());
  parallel_for(total, jobs, [&](int idx) {
    const std::size_t gi = static_cast<std::size_t>(idx) / static_cast<std::size_t>(runs);
    const int run = idx % runs;
    const int n = n_grid[gi];
    const int m = std::max(1, n / 2);
    const ObservedDataset data =
        generate_dataset(task, n, seed, mix_seed(kScalingDataTag, static_cast<std::uint64_t>(n)));
    SamplingProtocol protocol;
    protocol.ordering = Ordering::FixedOrdering;
    protocol.num_paths = num_paths;
    protocol.path_length = m;
    protocol.ensemble_seed = mix_seed(
        mix_seed(mix_seed(seed, model_salt), kScalingRunTag + static_cast<std::uint64_t>(n)),
        static_cast<std::uint64_t>(run));
    PathEnsemble ensemble = generate_ensemble(model, protocol, data, 1);
    if (ensemble.paths.size() >= 4) ensemble = filter_outlier_paths(ensemble);
    t3_values[gi][static_cast<std::size_t>(run)] = t3(ensemble, family);
  });

  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    curve[gi].n = n_grid[gi];
    curve[gi].m = std::max(1, n_grid[gi] / 2);
    curve[gi].median_t3 = quantile(t3_values[gi], 0.5);
    curve[gi].t3_q25 = quantile(t3_values[gi], 0.25);
    curve[gi].t3_q75 = quantile(t3_values[gi], 0.75);
  }
  return curve;
}

double scaling_slope(std::span<const ScalingPoint> curve) {
  std::vector<std::pair<double, double>> points;
  points.reserve(curve.size());
  for (const ScalingPoint& pt : curve)
    points.emplace_back(static_cast<double>(pt.n), pt.median_t3);
  return loglog_slope(points);
}

Fact3Result fact3_check(const BetaParams& prior, int n, int num_mc, RngStream& rng) {
  prior.validate();
  if (n < 0) throw std::invalid_argument("n must be non-negative");
  if (num_mc < 2) throw std::invalid_argument("num_mc must be at least 2");

  Fact3Result result;
  result.num_mc = num_mc;
  double sum_lhs = 0.0, sum_rhs = 0.0, sum_diff = 0.0, sum_diff_sq = 0.0;
  for (int r = 0; r < num_mc; ++r) {
    const double theta0 = rng.beta(prior.a, prior.b);
    long ones = 0;
    for (int i = 0; i < n; ++i) ones += rng.bernoulli(theta0) ? 1 : 0;
    const double a_post = prior.a + static_cast<double>(ones);
    const double b_post = prior.b + static_cast<double>(n - ones);
    const double total = a_post + b_post;
    const double post_mean = a_post / total;
    const double post_var = a_post * b_post / (total * total * (total + 1.0));
    const double err = (theta0 - post_mean) * (theta0 - post_mean);
    sum_lhs += post_var;
    sum_rhs += err;
    const double diff = err - post_var;
    sum_diff += diff;
    sum_diff_sq += diff * diff;
  }
  const double nn = static_cast<double>(num_mc);
  result.lhs = sum_lhs / nn;
  result.rhs = sum_rhs / nn;
  const double var_diff = (sum_diff_sq - sum_diff * sum_diff / nn) / (nn - 1.0);
  result.mc_standard_error = std::sqrt(std::max(0.0, var_diff) / nn);
  return result;
}

Fact3Result fact3_check(const GaussianPriorParams& prior, int n, int num_mc, RngStream& rng) {
  prior.validate();
  if (n < 0) throw std::invalid_argument("n must be non-negative");
  if (num_mc < 2) throw std::invalid_argument("num_mc must be at least 2");

  Fact3Result result;
  result.num_mc = num_mc;
  const double precision = 1.0 / prior.variance + static_cast<double>(n);
  const double post_var = 1.0 / precision;  // data independent
  double sum_rhs = 0.0, sum_diff = 0.0, sum_diff_sq = 0.0;
  for (int r = 0; r < num_mc; ++r) {
    const double theta0 = rng.normal(prior.mean, std::sqrt(prior.variance));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.normal(theta0, 1.0);
    const double post_mean = (prior.mean / prior.variance + sum) / precision;
    const double err = (theta0 - post_mean) * (theta0 - post_mean);
    sum_rhs += err;
    const double diff = err - post_var;
    sum_diff += diff;
    sum_diff_sq += diff * diff;
  }
  const double nn = static_cast<double>(num_mc);
  result.lhs = post_var;
  result.rhs = sum_rhs / nn;
  const double var_diff = (sum_diff_sq - sum_diff * sum_diff / nn) / (nn - 1.0);
  result.mc_standard_error = std::sqrt(std::max(0.0, var_diff) / nn);
  return result;
}

}  // namespace mprobe
