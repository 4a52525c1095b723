#include "mprobe/data_gen.hpp"

#include <stdexcept>

namespace mprobe {

ObservedDataset generate_dataset(const TaskSpec& task, int n, RngStream& rng) {
  task.validate();
  if (n < 1) throw std::invalid_argument("dataset size must be at least 1");

  ObservedDataset data;
  data.task = task;
  data.samples.reserve(static_cast<std::size_t>(n));

  switch (task.kind) {
    case TaskKind::Bernoulli: {
      if (!task.theta) throw std::invalid_argument("bernoulli generation requires theta");
      for (int i = 0; i < n; ++i)
        data.samples.push_back(Sample::binary(rng.bernoulli(*task.theta) ? 1 : 0));
      break;
    }
    case TaskKind::Gaussian: {
      if (!task.theta) throw std::invalid_argument("gaussian generation requires theta");
      for (int i = 0; i < n; ++i)
        data.samples.push_back(Sample::real(quantize_tenths(rng.normal(*task.theta, 1.0))));
      break;
    }
    case TaskKind::NaturalLanguage: {
      for (int i = 0; i < n; ++i) {
        const int x = rng.bernoulli(0.5) ? 1 : 0;
        const int y = rng.bernoulli(task.nl_base + task.nl_effect * x) ? 1 : 0;
        data.samples.push_back(Sample::pair(x, y));
      }
      break;
    }
  }
  return data;
}

ObservedDataset generate_dataset(const TaskSpec& task, int n, std::uint64_t root_seed,
                                 std::uint64_t stream_id) {
  RngStream rng(root_seed, stream_id);
  ObservedDataset data = generate_dataset(task, n, rng);
  data.generation_seed = mix_seed(root_seed, stream_id);
  return data;
}

}  // namespace mprobe
