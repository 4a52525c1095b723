#pragma once

// Columnar text persistence for datasets and path ensembles, so that
// diagnostics can rerun offline against previously generated paths.
//
// Ensemble files carry one row per path:
//   path_seed <TAB> permutation ("|"-joined, "-" for identity)
//             <TAB> comma-joined values <TAB> retained flag
// Values render as "0"/"1" (binary), one-decimal text (real), or "x:y"
// (pair). Dataset files use the same layout with a single row.

#include <filesystem>
#include <string>

#include "mprobe/sample.hpp"

namespace mprobe {

std::string render_value_token(const Sample& sample);
Sample parse_value_token(const std::string& token, TaskKind kind);

void write_ensemble_file(const std::filesystem::path& path, const PathEnsemble& ensemble);
PathEnsemble read_ensemble_file(const std::filesystem::path& path);

void write_dataset_file(const std::filesystem::path& path, const ObservedDataset& dataset);
// Reads samples and kind; the task's true parameter is not persisted and
// comes back unset unless recorded in the header.
ObservedDataset read_dataset_file(const std::filesystem::path& path);

}  // namespace mprobe
