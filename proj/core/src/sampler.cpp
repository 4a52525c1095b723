#include "mprobe/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mprobe/parallel.hpp"
#include "mprobe/stats.hpp"

namespace mprobe {

std::string to_string(Ordering ordering) {
  return ordering == Ordering::PermutePerPath ? "permute" : "fixed";
}

Ordering ordering_from_string(const std::string& name) {
  if (name == "permute" || name == "permute_per_path") return Ordering::PermutePerPath;
  if (name == "fixed" || name == "fixed_ordering") return Ordering::FixedOrdering;
  throw std::invalid_argument("unknown ordering: " + name);
}

void SamplingProtocol::validate() const {
  if (num_paths < 1) throw std::invalid_argument("J must be at least 1");
  if (path_length < 1) throw std::invalid_argument("m must be at least 1");
}

PathGenerationError::PathGenerationError(std::string message, std::vector<Sample> partial,
                                         std::string raw_tail)
    : std::runtime_error(std::move(message)), partial_(std::move(partial)),
      raw_tail_(std::move(raw_tail)) {}

PathEnsemble generate_ensemble(const SequentialPredictiveModel& model,
                               const SamplingProtocol& protocol, const ObservedDataset& observed,
                               int jobs) {
  protocol.validate();
  observed.validate();
  if (observed.task.kind != model.kind())
    throw std::invalid_argument("model kind does not match dataset task kind");

  const int n = observed.n();
  const int j_total = protocol.num_paths;
  std::vector<SamplePath> slots(static_cast<std::size_t>(j_total));
  std::vector<char> ok(static_cast<std::size_t>(j_total), 0);

  parallel_for(j_total, jobs, [&](int j) {
    RngStream rng(protocol.ensemble_seed, static_cast<std::uint64_t>(j));
    SamplePath path;
    path.path_seed = mix_seed(protocol.ensemble_seed, static_cast<std::uint64_t>(j));
    path.permutation.resize(static_cast<std::size_t>(n));
    std::iota(path.permutation.begin(), path.permutation.end(), 0);
    if (protocol.ordering == Ordering::PermutePerPath) rng.shuffle(path.permutation);

    std::vector<Sample> context;
    context.reserve(static_cast<std::size_t>(n));
    for (int idx : path.permutation) context.push_back(observed.samples[static_cast<std::size_t>(idx)]);

    try {
      path.values = model.sample_path(context, protocol.path_length, rng);
    } catch (const PathGenerationError&) {
      return;  // recorded as a failed path
    }
    slots[static_cast<std::size_t>(j)] = std::move(path);
    ok[static_cast<std::size_t>(j)] = 1;
  });

  PathEnsemble ensemble;
  ensemble.kind = observed.task.kind;
  ensemble.nominal_paths = j_total;
  ensemble.nominal_length = protocol.path_length;
  ensemble.ensemble_seed = protocol.ensemble_seed;
  for (int j = 0; j < j_total; ++j) {
    if (ok[static_cast<std::size_t>(j)])
      ensemble.paths.push_back(std::move(slots[static_cast<std::size_t>(j)]));
    else
      ++ensemble.failed_paths;
  }
  ensemble.retained.assign(ensemble.paths.size(), true);

  if (static_cast<double>(ensemble.paths.size()) < 0.9 * static_cast<double>(j_total))
    throw std::runtime_error("ensemble invalid: more than 10% of paths failed (" +
                             std::to_string(ensemble.failed_paths) + " of " +
                             std::to_string(j_total) + ")");
  return ensemble;
}

PathEnsemble filter_outlier_paths(const PathEnsemble& ensemble) {
  if (ensemble.paths.size() < 4)
    throw std::invalid_argument("ensemble too small to filter");

  std::vector<double> mean_abs;
  mean_abs.reserve(ensemble.paths.size());
  for (const SamplePath& path : ensemble.paths) {
    double sum = 0.0;
    for (const Sample& s : path.values) sum += s.filter_magnitude();
    mean_abs.push_back(path.values.empty() ? 0.0
                                           : sum / static_cast<double>(path.values.size()));
  }

  const double q1 = quantile(mean_abs, 0.25);
  const double q3 = quantile(mean_abs, 0.75);
  const double spread = q3 - q1;
  const double lo = q1 - 1.5 * spread;
  const double hi = q3 + 1.5 * spread;

  PathEnsemble out = ensemble;
  for (std::size_t i = 0; i < out.paths.size(); ++i)
    out.retained[i] = out.retained[i] && mean_abs[i] >= lo && mean_abs[i] <= hi;
  return out;
}

std::pair<PathEnsemble, PathEnsemble> split_ensemble_by_x(const PathEnsemble& ensemble) {
  if (ensemble.kind != TaskKind::NaturalLanguage)
    throw std::invalid_argument("split_ensemble_by_x requires a pair ensemble");

  PathEnsemble side0, side1;
  for (PathEnsemble* side : {&side0, &side1}) {
    side->kind = TaskKind::Bernoulli;
    side->nominal_paths = ensemble.nominal_paths;
    side->nominal_length = ensemble.nominal_length;
    side->ensemble_seed = ensemble.ensemble_seed;
    side->failed_paths = ensemble.failed_paths;
    side->retained = ensemble.retained;
    side->variable_length = true;
  }
  for (const SamplePath& path : ensemble.paths) {
    SamplePath p0, p1;
    p0.path_seed = p1.path_seed = path.path_seed;
    p0.permutation = p1.permutation = path.permutation;
    for (const Sample& s : path.values) {
      Sample y = Sample::binary(s.pair_y());
      if (s.pair_x() == 0)
        p0.values.push_back(y);
      else
        p1.values.push_back(y);
    }
    side0.paths.push_back(std::move(p0));
    side1.paths.push_back(std::move(p1));
  }
  return {std::move(side0), std::move(side1)};
}

}  // namespace mprobe
