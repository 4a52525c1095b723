#pragma once

// Seeded synthetic dataset generation for the three task families.

#include "mprobe/rng.hpp"
#include "mprobe/sample.hpp"

namespace mprobe {

// n i.i.d. draws from the task's generating process. Gaussian draws are
// quantized to one decimal at generation so the prompt representation is
// lossless. Requires the task's true parameter to be present.
ObservedDataset generate_dataset(const TaskSpec& task, int n, RngStream& rng);

ObservedDataset generate_dataset(const TaskSpec& task, int n, std::uint64_t root_seed,
                                 std::uint64_t stream_id);

}  // namespace mprobe
