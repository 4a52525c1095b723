#include "mprobe/sample.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mprobe {

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Bernoulli: return "bernoulli";
    case TaskKind::Gaussian: return "gaussian";
    case TaskKind::NaturalLanguage: return "natural_language";
  }
  throw std::logic_error("unreachable task kind");
}

TaskKind task_kind_from_string(const std::string& name) {
  if (name == "bernoulli") return TaskKind::Bernoulli;
  if (name == "gaussian") return TaskKind::Gaussian;
  if (name == "natural_language" || name == "nl") return TaskKind::NaturalLanguage;
  throw std::invalid_argument("unknown task kind: " + name);
}

double quantize_tenths(double value) {
  // +0.0 turns -0.0 into +0.0.
  return std::round(value * 10.0) / 10.0 + 0.0;
}

std::string render_tenths(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", value);
  return buf;
}

double tenths_from_parts(bool negative, long long integer_part, int tenth_digit) {
  const double magnitude = static_cast<double>(integer_part * 10 + tenth_digit) / 10.0;
  return negative ? -magnitude + 0.0 : magnitude;
}

Sample Sample::binary(int value) {
  if (value != 0 && value != 1) throw std::invalid_argument("binary sample must be 0 or 1");
  return Sample(Type::Binary, 0.0, value, 0);
}

Sample Sample::real(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("real sample must be finite");
  if (value != quantize_tenths(value))
    throw std::invalid_argument("real sample must be quantized to one decimal");
  return Sample(Type::Real, value, 0, 0);
}

Sample Sample::pair(int x, int y) {
  if ((x != 0 && x != 1) || (y != 0 && y != 1))
    throw std::invalid_argument("pair components must each be 0 or 1");
  return Sample(Type::Pair, 0.0, x, y);
}

int Sample::binary_value() const {
  if (type_ != Type::Binary) throw std::logic_error("not a binary sample");
  return x_;
}

double Sample::real_value() const {
  if (type_ != Type::Real) throw std::logic_error("not a real sample");
  return real_;
}

int Sample::pair_x() const {
  if (type_ != Type::Pair) throw std::logic_error("not a pair sample");
  return x_;
}

int Sample::pair_y() const {
  if (type_ != Type::Pair) throw std::logic_error("not a pair sample");
  return y_;
}

bool Sample::matches(TaskKind kind) const {
  switch (kind) {
    case TaskKind::Bernoulli: return type_ == Type::Binary;
    case TaskKind::Gaussian: return type_ == Type::Real;
    case TaskKind::NaturalLanguage: return type_ == Type::Pair;
  }
  return false;
}

double Sample::scalar() const {
  switch (type_) {
    case Type::Binary: return static_cast<double>(x_);
    case Type::Real: return real_;
    case Type::Pair: throw std::logic_error("pair sample has no scalar view; split by x first");
  }
  throw std::logic_error("unreachable sample type");
}

double Sample::filter_magnitude() const {
  if (type_ == Type::Pair) return std::abs(static_cast<double>(y_));
  return std::abs(scalar());
}

bool Sample::operator==(const Sample& other) const {
  if (type_ != other.type_) return false;
  switch (type_) {
    case Type::Binary: return x_ == other.x_;
    case Type::Real: return real_ == other.real_;
    case Type::Pair: return x_ == other.x_ && y_ == other.y_;
  }
  return false;
}

TaskSpec TaskSpec::bernoulli(double theta) {
  TaskSpec spec;
  spec.kind = TaskKind::Bernoulli;
  spec.theta = theta;
  spec.validate();
  return spec;
}

TaskSpec TaskSpec::bernoulli_unknown() {
  TaskSpec spec;
  spec.kind = TaskKind::Bernoulli;
  return spec;
}

TaskSpec TaskSpec::gaussian(double theta) {
  TaskSpec spec;
  spec.kind = TaskKind::Gaussian;
  spec.theta = theta;
  spec.validate();
  return spec;
}

TaskSpec TaskSpec::gaussian_unknown() {
  TaskSpec spec;
  spec.kind = TaskKind::Gaussian;
  return spec;
}

TaskSpec TaskSpec::natural_language(double base, double effect) {
  TaskSpec spec;
  spec.kind = TaskKind::NaturalLanguage;
  spec.nl_base = base;
  spec.nl_effect = effect;
  spec.validate();
  return spec;
}

void TaskSpec::validate() const {
  switch (kind) {
    case TaskKind::Bernoulli:
      if (theta && (*theta < 0.0 || *theta > 1.0))
        throw std::invalid_argument("bernoulli theta must lie in [0,1]");
      break;
    case TaskKind::Gaussian:
      if (theta && !std::isfinite(*theta))
        throw std::invalid_argument("gaussian theta must be finite");
      break;
    case TaskKind::NaturalLanguage: {
      const double p0 = nl_base;
      const double p1 = nl_base + nl_effect;
      if (p0 < 0.0 || p0 > 1.0 || p1 < 0.0 || p1 > 1.0)
        throw std::invalid_argument("language task conditional means must lie in [0,1]");
      break;
    }
  }
}

void ObservedDataset::validate() const {
  task.validate();
  if (samples.empty()) throw std::invalid_argument("observed dataset must contain at least one sample");
  for (const Sample& s : samples)
    if (!s.matches(task.kind)) throw std::invalid_argument("sample kind does not match task kind");
}

bool is_identity_permutation(const std::vector<int>& perm) {
  for (std::size_t i = 0; i < perm.size(); ++i)
    if (perm[i] != static_cast<int>(i)) return false;
  return true;
}

bool is_valid_permutation(const std::vector<int>& perm) {
  std::vector<bool> seen(perm.size(), false);
  for (int p : perm) {
    if (p < 0 || p >= static_cast<int>(perm.size()) || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

int PathEnsemble::retained_count() const {
  int count = 0;
  for (bool keep : retained)
    if (keep) ++count;
  return count;
}

bool PathEnsemble::uniform_length() const {
  for (const SamplePath& path : paths)
    if (path.length() != nominal_length) return false;
  return true;
}

void PathEnsemble::validate() const {
  if (retained.size() != paths.size())
    throw std::invalid_argument("retained mask length must equal path count");
  for (const SamplePath& path : paths)
    for (const Sample& s : path.values)
      if (!s.matches(kind)) throw std::invalid_argument("path sample kind does not match ensemble kind");
}

}  // namespace mprobe
