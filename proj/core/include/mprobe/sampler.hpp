#pragma once

// Path-ensemble generation: the two observation-ordering protocols,
// deterministic concurrent assembly, the 1.5x IQR outlier filter, and the
// per-x split for the language task.

#include <stdexcept>
#include <utility>

#include "mprobe/models.hpp"
#include "mprobe/sample.hpp"

namespace mprobe {

enum class Ordering {
  PermutePerPath,  // fresh uniform permutation of the observations per path
  FixedOrdering,   // identity for every path
};

std::string to_string(Ordering ordering);
Ordering ordering_from_string(const std::string& name);

struct SamplingProtocol {
  Ordering ordering = Ordering::PermutePerPath;
  int num_paths = 200;   // J
  int path_length = 25;  // m
  std::uint64_t ensemble_seed = 0;
  void validate() const;
};

// Thrown by model adapters when a path cannot be completed; carries the
// partial path and the raw text that failed to parse.
class PathGenerationError : public std::runtime_error {
 public:
  PathGenerationError(std::string message, std::vector<Sample> partial, std::string raw_tail);
  const std::vector<Sample>& partial() const { return partial_; }
  const std::string& raw_tail() const { return raw_tail_; }

 private:
  std::vector<Sample> partial_;
  std::string raw_tail_;
};

// J autoregressive paths, path j drawn with RngStream(ensemble_seed, j).
// Under PermutePerPath the path's stream first draws the permutation.
// Paths that raise PathGenerationError are dropped and counted; the
// ensemble is valid while at least 90% of J succeed.
PathEnsemble generate_ensemble(const SequentialPredictiveModel& model,
                               const SamplingProtocol& protocol, const ObservedDataset& observed,
                               int jobs = 1);

// Marks paths whose mean |value| (|y| for pairs) falls outside
// [Q1 - 1.5 IQR, Q3 + 1.5 IQR] as not retained. Fences are computed from
// all generation-successful paths, so a second application is a no-op.
// Requires at least 4 paths.
PathEnsemble filter_outlier_paths(const PathEnsemble& ensemble);

// Splits a pair ensemble into the y-subsequences for x = 0 and x = 1.
// Sub-path lengths vary per path (possibly zero); downstream statistics
// normalise by effective lengths.
std::pair<PathEnsemble, PathEnsemble> split_ensemble_by_x(const PathEnsemble& ensemble);

}  // namespace mprobe
