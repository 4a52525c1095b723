#include "mprobe/persist.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mprobe {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(line);
  while (std::getline(in, token, sep)) out.push_back(token);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

std::map<std::string, std::string> parse_header_fields(const std::string& line) {
  std::map<std::string, std::string> fields;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    fields[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return fields;
}

std::string permutation_token(const std::vector<int>& perm) {
  if (is_identity_permutation(perm)) return "-";
  std::string out;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (i > 0) out += '|';
    out += std::to_string(perm[i]);
  }
  return out;
}

std::vector<int> parse_permutation_token(const std::string& token, std::size_t n) {
  std::vector<int> perm;
  if (token == "-") {
    perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
    return perm;
  }
  for (const std::string& part : split(token, '|')) perm.push_back(std::stoi(part));
  if (!is_valid_permutation(perm)) throw std::runtime_error("invalid permutation in ensemble file");
  return perm;
}

std::string values_token(const std::vector<Sample>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += render_value_token(values[i]);
  }
  return out;
}

std::vector<Sample> parse_values_token(const std::string& token, TaskKind kind) {
  std::vector<Sample> out;
  if (token.empty()) return out;
  for (const std::string& part : split(token, ',')) out.push_back(parse_value_token(part, kind));
  return out;
}

}  // namespace

std::string render_value_token(const Sample& sample) {
  switch (sample.type()) {
    case Sample::Type::Binary: return sample.binary_value() == 1 ? "1" : "0";
    case Sample::Type::Real: return render_tenths(sample.real_value());
    case Sample::Type::Pair:
      return std::to_string(sample.pair_x()) + ":" + std::to_string(sample.pair_y());
  }
  throw std::logic_error("unreachable sample type");
}

Sample parse_value_token(const std::string& token, TaskKind kind) {
  switch (kind) {
    case TaskKind::Bernoulli: {
      if (token == "0") return Sample::binary(0);
      if (token == "1") return Sample::binary(1);
      throw std::runtime_error("bad binary token: " + token);
    }
    case TaskKind::Gaussian: {
      std::size_t used = 0;
      const double value = std::stod(token, &used);
      if (used != token.size()) throw std::runtime_error("bad real token: " + token);
      return Sample::real(quantize_tenths(value));
    }
    case TaskKind::NaturalLanguage: {
      const auto colon = token.find(':');
      if (colon == std::string::npos) throw std::runtime_error("bad pair token: " + token);
      return Sample::pair(std::stoi(token.substr(0, colon)), std::stoi(token.substr(colon + 1)));
    }
  }
  throw std::logic_error("unreachable task kind");
}

void write_ensemble_file(const std::filesystem::path& path, const PathEnsemble& ensemble) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write ensemble file: " + path.string());
  const std::size_t n =
      ensemble.paths.empty() ? 0 : ensemble.paths.front().permutation.size();
  out << "# mprobe ensemble v1\n";
  out << "# task=" << to_string(ensemble.kind) << " J=" << ensemble.nominal_paths
      << " m=" << ensemble.nominal_length << " n=" << n << " seed=" << ensemble.ensemble_seed
      << " failed=" << ensemble.failed_paths << "\n";
  for (std::size_t i = 0; i < ensemble.paths.size(); ++i) {
    const SamplePath& p = ensemble.paths[i];
    out << p.path_seed << '\t' << permutation_token(p.permutation) << '\t'
        << values_token(p.values) << '\t' << (ensemble.retained[i] ? 1 : 0) << '\n';
  }
}

PathEnsemble read_ensemble_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read ensemble file: " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("# mprobe ensemble", 0) != 0)
    throw std::runtime_error("not an ensemble file: " + path.string());
  std::getline(in, line);
  const auto fields = parse_header_fields(line.substr(1));

  PathEnsemble ensemble;
  ensemble.kind = task_kind_from_string(fields.at("task"));
  ensemble.nominal_paths = std::stoi(fields.at("J"));
  ensemble.nominal_length = std::stoi(fields.at("m"));
  ensemble.ensemble_seed = std::stoull(fields.at("seed"));
  ensemble.failed_paths = std::stoi(fields.at("failed"));

  const std::size_t n = fields.count("n") ? std::stoul(fields.at("n")) : 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 4) throw std::runtime_error("malformed ensemble row");
    SamplePath p;
    p.path_seed = std::stoull(cols[0]);
    p.values = parse_values_token(cols[2], ensemble.kind);
    p.permutation = parse_permutation_token(cols[1], n);
    ensemble.paths.push_back(std::move(p));
    ensemble.retained.push_back(cols[3] == "1");
  }
  ensemble.validate();
  return ensemble;
}

void write_dataset_file(const std::filesystem::path& path, const ObservedDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path.string());
  char buf[32];
  const auto full = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "# mprobe dataset v1\n";
  out << "# task=" << to_string(dataset.task.kind) << " n=" << dataset.n();
  if (dataset.task.theta) out << " theta=" << full(*dataset.task.theta);
  if (dataset.task.kind == TaskKind::NaturalLanguage)
    out << " base=" << full(dataset.task.nl_base) << " effect=" << full(dataset.task.nl_effect);
  if (dataset.generation_seed) out << " seed=" << *dataset.generation_seed;
  out << "\n";
  out << (dataset.generation_seed ? *dataset.generation_seed : 0) << "\t-\t"
      << values_token(dataset.samples) << "\t1\n";
}

ObservedDataset read_dataset_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read dataset file: " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("# mprobe dataset", 0) != 0)
    throw std::runtime_error("not a dataset file: " + path.string());
  std::getline(in, line);
  const auto fields = parse_header_fields(line.substr(1));

  ObservedDataset dataset;
  dataset.task.kind = task_kind_from_string(fields.at("task"));
  if (fields.count("theta")) dataset.task.theta = std::stod(fields.at("theta"));
  if (fields.count("base")) dataset.task.nl_base = std::stod(fields.at("base"));
  if (fields.count("effect")) dataset.task.nl_effect = std::stod(fields.at("effect"));
  if (fields.count("seed")) dataset.generation_seed = std::stoull(fields.at("seed"));

  std::getline(in, line);
  const auto cols = split(line, '\t');
  if (cols.size() != 4) throw std::runtime_error("malformed dataset row");
  dataset.samples = parse_values_token(cols[2], dataset.task.kind);
  dataset.validate();
  return dataset;
}

}  // namespace mprobe
