#pragma once

// Domain value types shared by every module: samples, task descriptions,
// observed datasets, autoregressive sample paths and path ensembles.
// All types are immutable value objects once constructed and are safe to
// share across worker threads.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mprobe {

enum class TaskKind { Bernoulli, Gaussian, NaturalLanguage };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);

// Rounds to the nearest multiple of 0.1 (ties away from zero) and
// normalises -0.0 to +0.0. All Real samples carry values of this form so
// that text rendering at one decimal is lossless.
double quantize_tenths(double value);

// Renders a tenth-quantized value as e.g. "1.3", "-0.4", "12.0".
std::string render_tenths(double value);

// Reconstructs the exact double for sign * (10*integer_part + tenth)/10.
double tenths_from_parts(bool negative, long long integer_part, int tenth_digit);

// One observation: a coin flip, a one-decimal real, or an (x, y) pair of
// binary indicators (symptom, diagnosis).
class Sample {
 public:
  enum class Type { Binary, Real, Pair };

  static Sample binary(int value);
  static Sample real(double value);  // value must be tenth-quantized
  static Sample pair(int x, int y);

  Type type() const { return type_; }
  int binary_value() const;
  double real_value() const;
  int pair_x() const;
  int pair_y() const;

  bool matches(TaskKind kind) const;

  // Numeric view for statistics; defined for Binary and Real only.
  double scalar() const;

  // Magnitude used by the outlier filter: |value|, or |y| for pairs.
  double filter_magnitude() const;

  bool operator==(const Sample& other) const;
  bool operator!=(const Sample& other) const { return !(*this == other); }

 private:
  Sample(Type type, double real, int x, int y) : type_(type), real_(real), x_(x), y_(y) {}

  Type type_;
  double real_;
  int x_;
  int y_;
};

// What the data-generating process looks like. theta is the ground-truth
// parameter for synthetic generation and may be absent when auditing data
// of unknown origin. The language task draws X ~ Bern(0.5) and
// Y | X ~ Bern(nl_base + nl_effect * X).
struct TaskSpec {
  TaskKind kind = TaskKind::Bernoulli;
  std::optional<double> theta;
  double nl_base = 0.3;
  double nl_effect = 0.4;

  static TaskSpec bernoulli(double theta);
  static TaskSpec bernoulli_unknown();
  static TaskSpec gaussian(double theta);
  static TaskSpec gaussian_unknown();
  static TaskSpec natural_language(double base = 0.3, double effect = 0.4);

  void validate() const;
};

// The ordered in-context dataset z_{1:n}.
struct ObservedDataset {
  TaskSpec task;
  std::vector<Sample> samples;
  std::optional<std::uint64_t> generation_seed;

  int n() const { return static_cast<int>(samples.size()); }
  void validate() const;
};

// One autoregressive continuation z_{n+1:n+m} together with the seed and
// the observation permutation in effect when it was generated (identity
// under fixed ordering). Paths produced by splitting a pair ensemble by x
// may be shorter than the nominal length, including empty.
struct SamplePath {
  std::vector<Sample> values;
  std::uint64_t path_seed = 0;
  std::vector<int> permutation;

  int length() const { return static_cast<int>(values.size()); }
};

bool is_identity_permutation(const std::vector<int>& perm);
bool is_valid_permutation(const std::vector<int>& perm);

// J sample paths plus the retain mask maintained by the outlier filter.
// `paths` holds generation successes only; `failed_paths` counts the rest.
// variable_length marks per-x split results, whose sub-paths legitimately
// differ in length.
struct PathEnsemble {
  TaskKind kind = TaskKind::Bernoulli;
  int nominal_paths = 0;   // J
  int nominal_length = 0;  // m
  std::vector<SamplePath> paths;
  std::vector<bool> retained;
  std::uint64_t ensemble_seed = 0;
  int failed_paths = 0;
  bool variable_length = false;

  int retained_count() const;
  bool uniform_length() const;  // every path has nominal_length samples
  void validate() const;
};

}  // namespace mprobe
