#include "mprobe/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <mutex>

#include "mprobe/data_gen.hpp"
#include "mprobe/parallel.hpp"
#include "mprobe/persist.hpp"

namespace mprobe {

namespace {

constexpr std::uint64_t kTagData = 0x4D50524F42450001ULL;
constexpr std::uint64_t kTagEnsemble = 0x4D50524F42450002ULL;
constexpr std::uint64_t kTagBootstrap = 0x4D50524F42450003ULL;
constexpr std::uint64_t kTagReplicate = 0x4D50524F42450004ULL;
constexpr std::uint64_t kTagFact3 = 0x4D50524F42450005ULL;

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label)
    out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '_';
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << contents;
}

std::vector<StatisticSpec> build_statistics(const ExperimentConfig& config) {
  std::vector<StatisticSpec> specs;
  const bool split = config.task.kind == TaskKind::NaturalLanguage;
  for (const TestFunction& g : config.t1_g) {
    if (split) {
      specs.push_back(StatisticSpec::t1_spec(g, StatisticSpec::Side::X0));
      specs.push_back(StatisticSpec::t1_spec(g, StatisticSpec::Side::X1));
    } else {
      specs.push_back(StatisticSpec::t1_spec(g));
    }
  }
  for (int k : config.t2_k) {
    if (split) {
      specs.push_back(StatisticSpec::t2_spec(k, StatisticSpec::Side::X0));
      specs.push_back(StatisticSpec::t2_spec(k, StatisticSpec::Side::X1));
    } else {
      specs.push_back(StatisticSpec::t2_spec(k));
    }
  }
  if (config.run_t3 && !split) specs.push_back(StatisticSpec::t3_spec(mle_family_for(config.task.kind)));
  return specs;
}

ObservedDataset obtain_dataset(const ExperimentConfig& config) {
  if (!config.dataset_file.empty()) {
    ObservedDataset data = read_dataset_file(config.dataset_file);
    if (data.task.kind != config.task.kind)
      throw std::invalid_argument("dataset file task kind does not match configuration");
    return data;
  }
  return generate_dataset(config.task, config.n, config.seed, kTagData);
}

struct PipelineOutcome {
  ObservedDataset data;
  PathEnsemble ensemble;  // filtered
  std::vector<DiagnosticResult> results;
};

PipelineOutcome run_pipeline(const ExperimentConfig& config,
                             const SequentialPredictiveModel& model_under_test, int jobs) {
  PipelineOutcome outcome;
  outcome.data = obtain_dataset(config);
  const int n = outcome.data.n();
  const int m = config.resolved_m();

  SamplingProtocol protocol;
  protocol.ordering = config.ordering;
  protocol.num_paths = config.num_paths;
  protocol.path_length = m;
  protocol.ensemble_seed = mix_seed(config.seed, kTagEnsemble);

  PathEnsemble ensemble = generate_ensemble(model_under_test, protocol, outcome.data, jobs);
  outcome.ensemble = ensemble.paths.size() >= 4 ? filter_outlier_paths(ensemble) : ensemble;

  const std::vector<StatisticSpec> specs = build_statistics(config);
  const auto reference = make_model(ModelSpec{}, config, nullptr, nullptr);
  const auto replicate_values =
      bootstrap_statistics(*reference, outcome.data, protocol, specs, config.num_replicates,
                           mix_seed(config.seed, kTagBootstrap), jobs);

  const double band = acceptable_band(n);
  RunMeta meta;
  meta.task = to_string(config.task.kind);
  meta.model = model_under_test.name();
  meta.n = n;
  meta.m = m;
  meta.num_paths = config.num_paths;
  meta.retained_paths = outcome.ensemble.retained_count();

  for (std::size_t i = 0; i < specs.size(); ++i) {
    ObservedStatistic observed;
    observed.name = specs[i].name();
    observed.variant = specs[i].variant();
    observed.value = specs[i].evaluate(outcome.ensemble);
    observed.meta = meta;

    BootstrapCi ci;
    ci.name = specs[i].name();
    ci.variant = specs[i].variant();
    ci.ci = ci_from_replicates(replicate_values[i], config.level);
    ci.n = n;
    ci.m = m;
    ci.num_paths = config.num_paths;

    outcome.results.push_back(run_check(observed, ci, band));
  }
  return outcome;
}

std::string results_to_jsonl(const std::vector<DiagnosticResult>& results) {
  std::string out;
  for (const DiagnosticResult& result : results) {
    out += diagnostic_result_to_json(result).dump();
    out += '\n';
  }
  return out;
}

std::string results_to_csv(const std::vector<DiagnosticResult>& results) {
  std::string out = results_csv_header() + "\n";
  for (const DiagnosticResult& result : results) out += diagnostic_result_to_csv(result) + "\n";
  return out;
}

std::string martingale_plot_data(const std::vector<DiagnosticResult>& results) {
  std::string out = "# index\tstatistic\tvariant\tobserved\tci_lo\tci_hi\tband\tverdict\n";
  int index = 0;
  for (const DiagnosticResult& r : results) {
    out += std::to_string(index++) + "\t" + r.statistic + "\t" + r.variant + "\t" +
           fmt(r.observed) + "\t" + fmt(r.ci.lower) + "\t" + fmt(r.ci.upper) + "\t" +
           fmt(r.band_halfwidth) + "\t" + to_string(r.verdict) + "\n";
  }
  return out;
}

}  // namespace

ModelSpec ModelSpec::parse(const std::string& text) {
  ModelSpec spec;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "reference") {
    spec.kind = Kind::Reference;
  } else if (head == "fractional") {
    spec.kind = Kind::Fractional;
    if (!tail.empty()) spec.alpha = std::stod(tail);
  } else if (head == "drift") {
    spec.kind = Kind::Drift;
    if (!tail.empty()) {
      const double signed_delta = std::stod(tail);
      spec.drift.delta = std::abs(signed_delta);
      spec.drift.direction = signed_delta < 0.0 ? -1 : +1;
    }
  } else if (head == "remote") {
    spec.kind = Kind::Remote;
    if (!tail.empty()) spec.endpoint.model_name = tail;
  } else {
    throw std::invalid_argument("unknown model spec: " + text);
  }
  return spec;
}

std::string ModelSpec::label() const {
  switch (kind) {
    case Kind::Reference: return "reference";
    case Kind::Fractional: return "fractional_" + fmt(alpha);
    case Kind::Drift: return "drift_" + fmt(drift.delta * drift.direction);
    case Kind::Remote: return "remote_" + endpoint.model_name;
  }
  throw std::logic_error("unreachable model kind");
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json doc;
  switch (kind) {
    case Kind::Reference:
      doc["kind"] = "reference";
      break;
    case Kind::Fractional:
      doc["kind"] = "fractional";
      doc["alpha"] = alpha;
      break;
    case Kind::Drift:
      doc["kind"] = "drift";
      doc["delta"] = drift.delta;
      doc["direction"] = drift.direction;
      break;
    case Kind::Remote:
      doc["kind"] = "remote";
      doc["endpoint"] = {{"base_url", endpoint.base_url},
                         {"api_key_env", endpoint.api_key_env},
                         {"model_name", endpoint.model_name},
                         {"temperature", endpoint.temperature},
                         {"max_tokens_per_request", endpoint.max_tokens_per_request},
                         {"mode", to_string(endpoint.mode)},
                         {"request_timeout_s", endpoint.request_timeout_s},
                         {"max_retries", endpoint.max_retries},
                         {"min_request_interval_ms", endpoint.min_request_interval_ms},
                         {"backoff_base_ms", endpoint.backoff_base_ms},
                         {"parse_repair_budget", endpoint.parse_repair_budget}};
      break;
  }
  return doc;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& doc) {
  ModelSpec spec;
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "reference") {
    spec.kind = Kind::Reference;
  } else if (kind == "fractional") {
    spec.kind = Kind::Fractional;
    if (doc.contains("alpha")) spec.alpha = doc.at("alpha").get<double>();
  } else if (kind == "drift") {
    spec.kind = Kind::Drift;
    if (doc.contains("delta")) spec.drift.delta = doc.at("delta").get<double>();
    if (doc.contains("direction")) spec.drift.direction = doc.at("direction").get<int>();
  } else if (kind == "remote") {
    spec.kind = Kind::Remote;
    if (doc.contains("endpoint")) {
      const nlohmann::json& e = doc.at("endpoint");
      if (e.contains("base_url")) spec.endpoint.base_url = e.at("base_url").get<std::string>();
      if (e.contains("api_key_env")) spec.endpoint.api_key_env = e.at("api_key_env").get<std::string>();
      if (e.contains("model_name")) spec.endpoint.model_name = e.at("model_name").get<std::string>();
      if (e.contains("temperature")) spec.endpoint.temperature = e.at("temperature").get<double>();
      if (e.contains("max_tokens_per_request"))
        spec.endpoint.max_tokens_per_request = e.at("max_tokens_per_request").get<int>();
      if (e.contains("mode"))
        spec.endpoint.mode = sampling_mode_from_string(e.at("mode").get<std::string>());
      if (e.contains("request_timeout_s"))
        spec.endpoint.request_timeout_s = e.at("request_timeout_s").get<double>();
      if (e.contains("max_retries")) spec.endpoint.max_retries = e.at("max_retries").get<int>();
      if (e.contains("min_request_interval_ms"))
        spec.endpoint.min_request_interval_ms = e.at("min_request_interval_ms").get<int>();
      if (e.contains("backoff_base_ms"))
        spec.endpoint.backoff_base_ms = e.at("backoff_base_ms").get<int>();
      if (e.contains("parse_repair_budget"))
        spec.endpoint.parse_repair_budget = e.at("parse_repair_budget").get<int>();
    }
  } else {
    throw std::invalid_argument("unknown model kind: " + kind);
  }
  return spec;
}

int MRule::resolve(int n, bool require_even) const {
  int value = 0;
  switch (kind) {
    case Kind::Literal:
      if (require_even && literal % 2 != 0)
        throw std::invalid_argument("odd literal m is invalid when T1 is requested");
      value = literal;
      break;
    case Kind::HalfN:
      value = n / 2;
      if (require_even) value -= value % 2;
      break;
    case Kind::TwoN:
      value = 2 * n;
      break;
  }
  if (value < 1) throw std::invalid_argument("resolved m must be at least 1");
  return value;
}

std::string MRule::text() const {
  switch (kind) {
    case Kind::Literal: return std::to_string(literal);
    case Kind::HalfN: return "n/2";
    case Kind::TwoN: return "2n";
  }
  throw std::logic_error("unreachable m rule kind");
}

MRule MRule::parse_json(const nlohmann::json& value) {
  MRule rule;
  if (value.is_number_integer()) {
    rule.kind = Kind::Literal;
    rule.literal = value.get<int>();
    return rule;
  }
  const std::string text = value.get<std::string>();
  if (text == "n/2") {
    rule.kind = Kind::HalfN;
  } else if (text == "2n") {
    rule.kind = Kind::TwoN;
  } else {
    rule.kind = Kind::Literal;
    rule.literal = std::stoi(text);
  }
  return rule;
}

int ExperimentConfig::resolved_m() const { return m.resolve(n, t1_requested()); }

void ExperimentConfig::validate() const {
  task.validate();
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (num_paths < 1) throw std::invalid_argument("J must be at least 1");
  if (num_replicates < 20) throw std::invalid_argument("too few replicates for the requested level");
  if (!(level > 0.0) || !(level < 1.0)) throw std::invalid_argument("level must lie in (0,1)");
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");

  const int resolved = resolved_m();  // throws for odd literal with T1
  if (t1_requested() && resolved < 2)
    throw std::invalid_argument("T1 requires m >= 2");
  for (int k : t2_k) {
    if (k < 2) throw std::invalid_argument("t2 requires k >= 2 (k = 1 is identically zero)");
    if (resolved < k + 2) throw std::invalid_argument("t2 requires m >= k + 2");
  }
  if (run_t3) {
    if (task.kind == TaskKind::NaturalLanguage)
      throw std::invalid_argument("T3 is undefined for the language task");
    if (num_paths < 4) throw std::invalid_argument("T3 requires J >= 4");
  }
  if ((model.kind == ModelSpec::Kind::Fractional || model.kind == ModelSpec::Kind::Drift) &&
      task.kind != TaskKind::Bernoulli)
    throw std::invalid_argument("fractional and drift models require the bernoulli task");
  if (model.kind == ModelSpec::Kind::Fractional && (!(model.alpha > 0.0) || model.alpha > 1.0))
    throw std::invalid_argument("alpha must lie in (0,1]");
  if (model.kind == ModelSpec::Kind::Drift) model.drift.validate();
  prior_beta.validate();
  prior_gaussian.validate();
  if (scaling_runs < 1) throw std::invalid_argument("scaling runs must be at least 1");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json task_doc;
  task_doc["kind"] = to_string(task.kind);
  if (task.theta) task_doc["theta"] = *task.theta;
  if (task.kind == TaskKind::NaturalLanguage) {
    task_doc["base"] = task.nl_base;
    task_doc["effect"] = task.nl_effect;
  }
  std::vector<std::string> g_labels;
  for (const TestFunction& g : t1_g) g_labels.push_back(g.label());

  nlohmann::json doc;
  doc["task"] = task_doc;
  doc["n"] = n;
  doc["m"] = m.text();
  doc["resolved_m"] = nlohmann::json();
  try {
    doc["resolved_m"] = resolved_m();
  } catch (const std::exception&) {
    // left null when the rule cannot resolve (reported by validate())
  }
  doc["J"] = num_paths;
  doc["K"] = num_replicates;
  doc["level"] = level;
  doc["statistics"] = {{"t1_g", g_labels}, {"t2_k", t2_k}, {"t3", run_t3}};
  doc["ordering"] = to_string(ordering);
  doc["model"] = model.to_json();
  doc["prior_beta"] = {{"a", prior_beta.a}, {"b", prior_beta.b}};
  doc["prior_gaussian"] = {{"mean", prior_gaussian.mean}, {"variance", prior_gaussian.variance}};
  doc["seed"] = seed;
  doc["out_dir"] = out_dir;
  doc["jobs"] = jobs;
  doc["n_grid"] = n_grid;
  doc["scaling_runs"] = scaling_runs;
  doc["fractional_alphas"] = fractional_alphas;
  doc["dataset_file"] = dataset_file;
  doc["prompt_template_file"] = prompt_template_file;
  doc["transcript_cache"] = transcript_cache_file;
  doc["confirm_network"] = confirm_network;
  return doc;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
  return from_json(doc, ExperimentConfig());
}

ExperimentConfig ExperimentConfig::load_file(const std::filesystem::path& path) {
  return load_file(path, ExperimentConfig());
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc, ExperimentConfig base) {
  ExperimentConfig config = std::move(base);
  if (doc.contains("task")) {
    const nlohmann::json& t = doc.at("task");
    TaskSpec task;
    task.kind = task_kind_from_string(t.at("kind").get<std::string>());
    if (t.contains("theta")) task.theta = t.at("theta").get<double>();
    if (t.contains("base")) task.nl_base = t.at("base").get<double>();
    if (t.contains("effect")) task.nl_effect = t.at("effect").get<double>();
    config.task = task;
  }
  if (doc.contains("n")) config.n = doc.at("n").get<int>();
  if (doc.contains("m")) config.m = MRule::parse_json(doc.at("m"));
  if (doc.contains("J")) config.num_paths = doc.at("J").get<int>();
  if (doc.contains("K")) config.num_replicates = doc.at("K").get<int>();
  if (doc.contains("level")) config.level = doc.at("level").get<double>();
  if (doc.contains("statistics")) {
    const nlohmann::json& s = doc.at("statistics");
    if (s.contains("t1_g")) {
      config.t1_g.clear();
      for (const auto& label : s.at("t1_g"))
        config.t1_g.push_back(test_function_from_string(label.get<std::string>()));
    }
    if (s.contains("t2_k")) config.t2_k = s.at("t2_k").get<std::vector<int>>();
    if (s.contains("t3")) config.run_t3 = s.at("t3").get<bool>();
  }
  if (doc.contains("ordering"))
    config.ordering = ordering_from_string(doc.at("ordering").get<std::string>());
  if (doc.contains("model")) config.model = ModelSpec::from_json(doc.at("model"));
  if (doc.contains("prior_beta")) {
    config.prior_beta.a = doc.at("prior_beta").at("a").get<double>();
    config.prior_beta.b = doc.at("prior_beta").at("b").get<double>();
  }
  if (doc.contains("prior_gaussian")) {
    config.prior_gaussian.mean = doc.at("prior_gaussian").at("mean").get<double>();
    config.prior_gaussian.variance = doc.at("prior_gaussian").at("variance").get<double>();
  }
  if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("out_dir")) config.out_dir = doc.at("out_dir").get<std::string>();
  if (doc.contains("jobs")) config.jobs = doc.at("jobs").get<int>();
  if (doc.contains("n_grid")) config.n_grid = doc.at("n_grid").get<std::vector<int>>();
  if (doc.contains("scaling_runs")) config.scaling_runs = doc.at("scaling_runs").get<int>();
  if (doc.contains("fractional_alphas"))
    config.fractional_alphas = doc.at("fractional_alphas").get<std::vector<double>>();
  if (doc.contains("dataset_file")) config.dataset_file = doc.at("dataset_file").get<std::string>();
  if (doc.contains("prompt_template_file"))
    config.prompt_template_file = doc.at("prompt_template_file").get<std::string>();
  if (doc.contains("transcript_cache"))
    config.transcript_cache_file = doc.at("transcript_cache").get<std::string>();
  if (doc.contains("confirm_network")) config.confirm_network = doc.at("confirm_network").get<bool>();
  return config;
}

ExperimentConfig ExperimentConfig::load_file(const std::filesystem::path& path,
                                             ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  return from_json(nlohmann::json::parse(in), std::move(base));
}

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
  ExperimentConfig config;
  if (name == "bernoulli-paper") {
    config.task = TaskSpec::bernoulli(0.5);
    config.n = 50;
    config.m = MRule{MRule::Kind::Literal, 24};  // n/2 rounded down to even
    config.num_paths = 200;
    config.num_replicates = 300;
    config.t1_g = {TestFunction::identity()};
    config.t2_k = {2, 3, 4, 5};
  } else if (name == "gaussian-paper") {
    config.task = TaskSpec::gaussian(-1.0);
    config.n = 100;
    config.m = MRule{MRule::Kind::Literal, 50};
    config.num_paths = 200;
    config.num_replicates = 300;
    config.t1_g = {TestFunction::identity(), TestFunction::square()};
    config.t2_k = {2, 3, 4, 5};
  } else if (name == "nl-paper") {
    config.task = TaskSpec::natural_language();
    config.n = 80;
    config.m = MRule{MRule::Kind::Literal, 40};
    config.num_paths = 80;
    config.num_replicates = 300;
    config.t1_g = {TestFunction::identity()};
    config.t2_k = {2, 3, 4, 5};
  } else if (name == "nl-paper-n100") {
    config = preset("nl-paper");
    config.n = 100;
    config.m = MRule{MRule::Kind::Literal, 50};
  } else if (name == "scaling-paper") {
    config.task = TaskSpec::bernoulli(0.5);
    config.n_grid = {20, 50, 100, 200, 400};
    config.num_paths = 200;
    config.scaling_runs = 9;
    config.fractional_alphas = {0.5, 0.25};
    config.ordering = Ordering::FixedOrdering;
    config.t1_g.clear();
    config.t2_k.clear();
    config.run_t3 = true;
  } else if (name == "drift-power") {
    config.task = TaskSpec::bernoulli(0.5);
    config.n = 50;
    config.m = MRule{MRule::Kind::Literal, 100};
    config.num_paths = 200;
    config.num_replicates = 300;
    config.t1_g = {TestFunction::identity()};
    config.t2_k.clear();
    config.model = ModelSpec::parse("drift:0.005");
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return config;
}

std::vector<std::string> ExperimentConfig::preset_names() {
  return {"bernoulli-paper", "gaussian-paper", "nl-paper", "nl-paper-n100",
          "scaling-paper", "drift-power"};
}

std::unique_ptr<SequentialPredictiveModel> make_model(const ModelSpec& spec,
                                                      const ExperimentConfig& config,
                                                      std::shared_ptr<HttpTransport> transport,
                                                      TranscriptCache* cache) {
  switch (spec.kind) {
    case ModelSpec::Kind::Reference:
      switch (config.task.kind) {
        case TaskKind::Bernoulli:
          return std::make_unique<BetaBernoulliModel>(config.prior_beta);
        case TaskKind::Gaussian:
          return std::make_unique<GaussianConjugateModel>(config.prior_gaussian);
        case TaskKind::NaturalLanguage:
          return std::make_unique<NlReferenceModel>(config.prior_beta, config.prior_beta,
                                                    config.prior_beta);
      }
      throw std::logic_error("unreachable task kind");
    case ModelSpec::Kind::Fractional:
      if (config.task.kind != TaskKind::Bernoulli)
        throw std::invalid_argument("fractional model requires the bernoulli task");
      return std::make_unique<FractionalBernoulliModel>(config.prior_beta, spec.alpha);
    case ModelSpec::Kind::Drift:
      if (config.task.kind != TaskKind::Bernoulli)
        throw std::invalid_argument("drift model requires the bernoulli task");
      return std::make_unique<DriftBernoulliModel>(config.prior_beta, spec.drift);
    case ModelSpec::Kind::Remote: {
      if (!transport) throw std::invalid_argument("remote model requires a transport");
      PromptTemplate tmpl = config.prompt_template_file.empty()
                                ? PromptTemplate::defaults(config.task.kind)
                                : load_prompt_template(config.prompt_template_file, config.task.kind);
      auto client = std::make_shared<LlmClient>(spec.endpoint, std::move(transport), cache);
      return std::make_unique<RemoteLlmModel>(config.task, std::move(tmpl), std::move(client));
    }
  }
  throw std::logic_error("unreachable model kind");
}

MartingaleReport run_check_martingale(const ExperimentConfig& config,
                                      std::shared_ptr<HttpTransport> transport) {
  config.validate();
  MartingaleReport report;
  report.resolved_config = config.to_json();

  const bool remote = config.model.kind == ModelSpec::Kind::Remote;
  const bool write_files = !config.out_dir.empty();
  if (write_files) std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path out_dir(config.out_dir);

  if (remote && !config.confirm_network) {
    report.dry_run = true;
    report.dry_run_estimate = estimate_requests(config.model.endpoint, config.task.kind,
                                                config.resolved_m(), config.num_paths);
    if (write_files) {
      nlohmann::json estimate = {{"dry_run", true},
                                 {"requests", report.dry_run_estimate.requests},
                                 {"completion_tokens", report.dry_run_estimate.completion_tokens}};
      write_text_file(out_dir / "config.json", report.resolved_config.dump(2) + "\n");
      write_text_file(out_dir / "dry_run.json", estimate.dump(2) + "\n");
    }
    return report;
  }

  std::unique_ptr<TranscriptCache> cache;
  if (remote) {
    std::filesystem::path cache_path(config.transcript_cache_file);
    if (cache_path.empty() && write_files) cache_path = out_dir / "transcript.jsonl";
    if (!cache_path.empty()) cache = std::make_unique<TranscriptCache>(cache_path);
  }
  if (remote && !transport) transport = make_httplib_transport();

  const auto model = make_model(config.model, config, transport, cache.get());
  PipelineOutcome outcome = run_pipeline(config, *model, config.jobs);
  report.results = outcome.results;
  report.ensemble_retained = outcome.ensemble.retained_count();
  report.ensemble_failed = outcome.ensemble.failed_paths;

  if (write_files) {
    write_text_file(out_dir / "config.json", report.resolved_config.dump(2) + "\n");
    write_dataset_file(out_dir / "dataset.txt", outcome.data);
    write_ensemble_file(out_dir / "ensemble.txt", outcome.ensemble);
    write_text_file(out_dir / "results.jsonl", results_to_jsonl(report.results));
    write_text_file(out_dir / "results.csv", results_to_csv(report.results));
    write_text_file(out_dir / "plot_martingale.txt", martingale_plot_data(report.results));
  }
  return report;
}

ScalingReport run_check_scaling(const ExperimentConfig& config,
                                std::shared_ptr<HttpTransport> transport) {
  config.validate();
  if (config.n_grid.size() < 3)
    throw std::invalid_argument("scaling requires at least 3 grid points");
  if (!std::is_sorted(config.n_grid.begin(), config.n_grid.end()))
    throw std::invalid_argument("scaling grid must be sorted ascending");
  if (config.task.kind == TaskKind::NaturalLanguage)
    throw std::invalid_argument("scaling requires a scalar-parameter task");
  if (!config.task.theta) throw std::invalid_argument("scaling requires a task with a true parameter");

  ScalingReport report;
  report.resolved_config = config.to_json();
  const bool write_files = !config.out_dir.empty();
  if (write_files) std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path out_dir(config.out_dir);

  const bool remote = config.model.kind == ModelSpec::Kind::Remote;
  if (remote && !config.confirm_network) {
    report.dry_run = true;
    for (int n : config.n_grid) {
      const RequestEstimate point = estimate_requests(config.model.endpoint, config.task.kind,
                                                      std::max(1, n / 2), config.num_paths);
      report.dry_run_estimate.requests += point.requests * config.scaling_runs;
      report.dry_run_estimate.completion_tokens += point.completion_tokens * config.scaling_runs;
    }
    if (write_files) {
      nlohmann::json estimate = {{"dry_run", true},
                                 {"requests", report.dry_run_estimate.requests},
                                 {"completion_tokens", report.dry_run_estimate.completion_tokens}};
      write_text_file(out_dir / "config.json", report.resolved_config.dump(2) + "\n");
      write_text_file(out_dir / "dry_run.json", estimate.dump(2) + "\n");
    }
    return report;
  }

  std::unique_ptr<TranscriptCache> cache;
  if (remote && !config.transcript_cache_file.empty())
    cache = std::make_unique<TranscriptCache>(config.transcript_cache_file);
  if (remote && !transport) transport = make_httplib_transport();

  struct Entry {
    std::string label;
    std::unique_ptr<SequentialPredictiveModel> model;
  };
  std::vector<Entry> entries;
  if (config.model.kind != ModelSpec::Kind::Reference) {
    Entry entry;
    entry.model = make_model(config.model, config, transport, cache.get());
    entry.label = entry.model->name();
    entries.push_back(std::move(entry));
  }
  {
    Entry entry;
    entry.model = make_model(ModelSpec{}, config, nullptr, nullptr);
    entry.label = entry.model->name();
    entries.push_back(std::move(entry));
  }
  if (config.task.kind == TaskKind::Bernoulli) {
    for (double alpha : config.fractional_alphas) {
      ModelSpec spec;
      spec.kind = ModelSpec::Kind::Fractional;
      spec.alpha = alpha;
      Entry entry;
      entry.model = make_model(spec, config, nullptr, nullptr);
      entry.label = entry.model->name();
      entries.push_back(std::move(entry));
    }
  }

  for (const Entry& entry : entries) {
    ScalingCurve curve;
    curve.model_label = entry.label;
    curve.points = scaling_experiment(*entry.model, config.task, config.n_grid, config.num_paths,
                                      config.scaling_runs, config.seed, config.jobs);
    curve.slope = scaling_slope(curve.points);
    report.curves.push_back(std::move(curve));
  }

  if (write_files) {
    write_text_file(out_dir / "config.json", report.resolved_config.dump(2) + "\n");
    nlohmann::json summary = nlohmann::json::array();
    std::string plot = "# model\tn\tm\tmedian_t3\tt3_q25\tt3_q75\n";
    for (const ScalingCurve& curve : report.curves) {
      std::string csv = "n,m,median_t3,t3_q25,t3_q75\n";
      nlohmann::json points = nlohmann::json::array();
      for (const ScalingPoint& pt : curve.points) {
        csv += std::to_string(pt.n) + "," + std::to_string(pt.m) + "," + fmt(pt.median_t3) + "," +
               fmt(pt.t3_q25) + "," + fmt(pt.t3_q75) + "\n";
        points.push_back({{"n", pt.n},
                          {"m", pt.m},
                          {"median_t3", pt.median_t3},
                          {"t3_q25", pt.t3_q25},
                          {"t3_q75", pt.t3_q75}});
        plot += curve.model_label + "\t" + std::to_string(pt.n) + "\t" + std::to_string(pt.m) +
                "\t" + fmt(pt.median_t3) + "\t" + fmt(pt.t3_q25) + "\t" + fmt(pt.t3_q75) + "\n";
      }
      write_text_file(out_dir / ("scaling_" + sanitize_label(curve.model_label) + ".csv"), csv);
      summary.push_back(
          {{"model", curve.model_label}, {"slope", curve.slope}, {"points", points}});
    }
    write_text_file(out_dir / "scaling_summary.json", summary.dump(2) + "\n");
    write_text_file(out_dir / "plot_scaling.txt", plot);
  }
  return report;
}

Fact3Report run_fact3(const std::string& prior_spec, const std::vector<int>& n_values, int num_mc,
                      std::uint64_t seed, const std::string& out_dir) {
  if (num_mc < 2) throw std::invalid_argument("num_mc must be at least 2");
  if (n_values.empty()) throw std::invalid_argument("at least one n value is required");

  const auto colon = prior_spec.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("prior spec must be family:params");
  const std::string family = prior_spec.substr(0, colon);
  const std::string params = prior_spec.substr(colon + 1);
  const auto comma = params.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("prior spec needs two parameters");
  const double p1 = std::stod(params.substr(0, comma));
  const double p2 = std::stod(params.substr(comma + 1));

  Fact3Report report;
  report.resolved_config = {{"prior", prior_spec}, {"n", n_values}, {"num_mc", num_mc}, {"seed", seed}};

  for (int n : n_values) {
    if (n < 0) throw std::invalid_argument("n must be non-negative");
    RngStream rng(seed, mix_seed(kTagFact3, static_cast<std::uint64_t>(n)));
    Fact3Line line;
    line.n = n;
    if (family == "beta") {
      BetaParams prior{p1, p2};
      line.prior_label = "beta(" + fmt(p1) + "," + fmt(p2) + ")";
      line.result = fact3_check(prior, n, num_mc, rng);
    } else if (family == "gaussian") {
      GaussianPriorParams prior{p1, p2};
      line.prior_label = "gaussian(" + fmt(p1) + "," + fmt(p2) + ")";
      line.result = fact3_check(prior, n, num_mc, rng);
    } else {
      throw std::invalid_argument("unknown prior family: " + family);
    }
    report.lines.push_back(std::move(line));
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    nlohmann::json doc = nlohmann::json::array();
    std::string csv = "prior,n,lhs,rhs,se,abs_diff_over_se\n";
    for (const Fact3Line& line : report.lines) {
      const double ratio = line.result.mc_standard_error > 0.0
                               ? std::abs(line.result.lhs - line.result.rhs) /
                                     line.result.mc_standard_error
                               : 0.0;
      doc.push_back({{"prior", line.prior_label},
                     {"n", line.n},
                     {"lhs", line.result.lhs},
                     {"rhs", line.result.rhs},
                     {"mc_standard_error", line.result.mc_standard_error},
                     {"num_mc", line.result.num_mc}});
      csv += csv_quote(line.prior_label) + "," + std::to_string(line.n) + "," + fmt(line.result.lhs) +
             "," + fmt(line.result.rhs) + "," + fmt(line.result.mc_standard_error) + "," +
             fmt(ratio) + "\n";
    }
    write_text_file(std::filesystem::path(out_dir) / "fact3.json", doc.dump(2) + "\n");
    write_text_file(std::filesystem::path(out_dir) / "fact3.csv", csv);
    write_text_file(std::filesystem::path(out_dir) / "config.json",
                    report.resolved_config.dump(2) + "\n");
  }
  return report;
}

double ReplicationStat::fail_frequency() const {
  const int total = pass + pass_within_band + fail;
  return total == 0 ? 0.0 : static_cast<double>(fail) / static_cast<double>(total);
}

ReplicationSummary run_replicate(const ExperimentConfig& config, int replications,
                                 std::shared_ptr<HttpTransport> transport) {
  config.validate();
  if (replications < 10) throw std::invalid_argument("replication study requires R >= 10");
  if (config.model.kind == ModelSpec::Kind::Remote && !config.confirm_network)
    throw std::invalid_argument("replicating a remote model requires confirm_network");

  if (config.model.kind == ModelSpec::Kind::Remote && !transport)
    transport = make_httplib_transport();

  ReplicationSummary summary;
  summary.resolved_config = config.to_json();
  summary.resolved_config["replications"] = replications;
  summary.replications = replications;

  std::vector<std::vector<DiagnosticResult>> per_rep(static_cast<std::size_t>(replications));
  parallel_for(replications, config.jobs, [&](int r) {
    ExperimentConfig rep_config = config;
    rep_config.seed = mix_seed(config.seed, kTagReplicate + static_cast<std::uint64_t>(r));
    rep_config.out_dir.clear();
    rep_config.jobs = 1;
    const auto model = make_model(rep_config.model, rep_config, transport, nullptr);
    per_rep[static_cast<std::size_t>(r)] = run_pipeline(rep_config, *model, 1).results;
  });

  for (const auto& results : per_rep) {
    for (const DiagnosticResult& result : results) {
      auto it = std::find_if(summary.stats.begin(), summary.stats.end(),
                             [&](const ReplicationStat& stat) {
                               return stat.statistic == result.statistic &&
                                      stat.variant == result.variant;
                             });
      if (it == summary.stats.end()) {
        summary.stats.push_back(ReplicationStat{result.statistic, result.variant, 0, 0, 0});
        it = std::prev(summary.stats.end());
      }
      switch (result.verdict) {
        case Verdict::Pass: ++it->pass; break;
        case Verdict::PassWithinBand: ++it->pass_within_band; break;
        case Verdict::Fail: ++it->fail; break;
      }
    }
  }

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    nlohmann::json doc = nlohmann::json::array();
    std::string csv = "statistic,variant,pass,pass_within_band,fail,fail_frequency\n";
    for (const ReplicationStat& stat : summary.stats) {
      doc.push_back({{"statistic", stat.statistic},
                     {"variant", stat.variant},
                     {"pass", stat.pass},
                     {"pass_within_band", stat.pass_within_band},
                     {"fail", stat.fail},
                     {"fail_frequency", stat.fail_frequency()}});
      csv += stat.statistic + "," + csv_quote(stat.variant) + "," + std::to_string(stat.pass) + "," +
             std::to_string(stat.pass_within_band) + "," + std::to_string(stat.fail) + "," +
             fmt(stat.fail_frequency()) + "\n";
    }
    write_text_file(std::filesystem::path(config.out_dir) / "replicate_summary.json",
                    doc.dump(2) + "\n");
    write_text_file(std::filesystem::path(config.out_dir) / "replicate_summary.csv", csv);
    write_text_file(std::filesystem::path(config.out_dir) / "config.json",
                    summary.resolved_config.dump(2) + "\n");
  }
  return summary;
}

int exit_code_for(const std::vector<DiagnosticResult>& results) {
  for (const DiagnosticResult& result : results)
    if (result.verdict == Verdict::Fail) return 2;
  return 0;
}

nlohmann::json diagnostic_result_to_json(const DiagnosticResult& result) {
  return {{"statistic", result.statistic},
          {"variant", result.variant},
          {"observed", result.observed},
          {"ci",
           {{"lower", result.ci.lower},
            {"upper", result.ci.upper},
            {"level", result.ci.level},
            {"replicates", result.ci.replicates}}},
          {"band_halfwidth", result.band_halfwidth},
          {"verdict", to_string(result.verdict)},
          {"meta",
           {{"task", result.meta.task},
            {"model", result.meta.model},
            {"n", result.meta.n},
            {"m", result.meta.m},
            {"J", result.meta.num_paths},
            {"retained", result.meta.retained_paths}}}};
}

std::string results_csv_header() {
  return "task,model,n,m,J,statistic,k_or_g,value,ci_lo,ci_hi,band,verdict";
}

std::string diagnostic_result_to_csv(const DiagnosticResult& result) {
  return csv_quote(result.meta.task) + "," + csv_quote(result.meta.model) + "," +
         std::to_string(result.meta.n) + "," + std::to_string(result.meta.m) + "," +
         std::to_string(result.meta.num_paths) + "," + result.statistic + "," +
         csv_quote(result.variant) + "," + fmt(result.observed) + "," + fmt(result.ci.lower) + "," +
         fmt(result.ci.upper) + "," + fmt(result.band_halfwidth) + "," + to_string(result.verdict);
}

}  // namespace mprobe
