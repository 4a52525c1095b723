#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mprobe/data_gen.hpp"

using namespace mprobe;

TEST_CASE("generate_dataset: determinism") {
  const auto task = TaskSpec::bernoulli(0.3);
  const ObservedDataset a = generate_dataset(task, 100, 1, 2);
  const ObservedDataset b = generate_dataset(task, 100, 1, 2);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i] == b.samples[i]);

  const ObservedDataset c = generate_dataset(task, 100, 1, 3);
  bool identical = true;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    identical = identical && a.samples[i] == c.samples[i];
  CHECK_FALSE(identical);
}

TEST_CASE("generate_dataset: bernoulli mean") {
  const int n = 100000;
  const ObservedDataset data = generate_dataset(TaskSpec::bernoulli(0.5), n, 7, 0);
  double sum = 0.0;
  for (const Sample& s : data.samples) sum += s.binary_value();
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));  // 3 sigma = 0.0047
}

TEST_CASE("generate_dataset: gaussian mean, variance and quantization") {
  const int n = 100000;
  const ObservedDataset data = generate_dataset(TaskSpec::gaussian(-1.0), n, 7, 1);
  double sum = 0.0;
  double sq = 0.0;
  for (const Sample& s : data.samples) {
    CHECK(s.real_value() == quantize_tenths(s.real_value()));
    sum += s.real_value();
  }
  const double mean = sum / n;
  for (const Sample& s : data.samples) sq += (s.real_value() - mean) * (s.real_value() - mean);
  CHECK(mean == doctest::Approx(-1.0).epsilon(0.01));
  CHECK(sq / (n - 1) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("generate_dataset: language conditional means") {
  const int n = 100000;
  const ObservedDataset data = generate_dataset(TaskSpec::natural_language(), n, 7, 2);
  long n1 = 0, y1_given_1 = 0, n0 = 0, y1_given_0 = 0;
  for (const Sample& s : data.samples) {
    if (s.pair_x() == 1) {
      ++n1;
      y1_given_1 += s.pair_y();
    } else {
      ++n0;
      y1_given_0 += s.pair_y();
    }
  }
  CHECK(static_cast<double>(n1) / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(static_cast<double>(y1_given_1) / n1 == doctest::Approx(0.7).epsilon(0.015));
  CHECK(static_cast<double>(y1_given_0) / n0 == doctest::Approx(0.3).epsilon(0.03));
}

TEST_CASE("generate_dataset: validation") {
  CHECK_THROWS_AS(generate_dataset(TaskSpec::bernoulli_unknown(), 10, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_dataset(TaskSpec::gaussian_unknown(), 10, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_dataset(TaskSpec::bernoulli(0.5), 0, 1, 0), std::invalid_argument);
  CHECK_NOTHROW(generate_dataset(TaskSpec::natural_language(), 10, 1, 0));
}
