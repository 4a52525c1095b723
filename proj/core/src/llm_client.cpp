#include "mprobe/llm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "mprobe/persist.hpp"

namespace mprobe {

namespace {

nlohmann::json parse_body(const std::string& body, int status) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw HttpError("malformed response body", status);
  }
}

std::string extract_text(const nlohmann::json& body, SamplingMode mode, int status) {
  try {
    const nlohmann::json& choice = body.at("choices").at(0);
    if (mode == SamplingMode::Completion) return choice.at("text").get<std::string>();
    return choice.at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw HttpError("response body missing completion text", status);
  }
}

}  // namespace

std::string to_string(SamplingMode mode) {
  return mode == SamplingMode::Completion ? "completion" : "chat";
}

SamplingMode sampling_mode_from_string(const std::string& name) {
  if (name == "completion") return SamplingMode::Completion;
  if (name == "chat") return SamplingMode::Chat;
  throw std::invalid_argument("unknown sampling mode: " + name);
}

void EndpointConfig::validate() const {
  if (base_url.empty()) throw std::invalid_argument("base_url must not be empty");
  if (model_name.empty()) throw std::invalid_argument("model_name must not be empty");
  if (temperature < 0.0) throw std::invalid_argument("temperature must be non-negative");
  if (max_tokens_per_request < 1) throw std::invalid_argument("max_tokens_per_request must be positive");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be non-negative");
  if (min_request_interval_ms < 0) throw std::invalid_argument("min_request_interval_ms must be non-negative");
  if (parse_repair_budget < 0) throw std::invalid_argument("parse_repair_budget must be non-negative");
}

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse post(const std::string& base_url, const std::string& path,
                    const std::string& body,
                    const std::vector<std::pair<std::string, std::string>>& headers,
                    double timeout_s) override {
    // Split "scheme://host[:port]/prefix" into client root and prefix.
    std::string root = base_url;
    std::string prefix;
    const auto scheme_end = base_url.find("://");
    if (scheme_end != std::string::npos) {
      const auto path_start = base_url.find('/', scheme_end + 3);
      if (path_start != std::string::npos) {
        root = base_url.substr(0, path_start);
        prefix = base_url.substr(path_start);
      }
    }
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client client(root);
    client.set_connection_timeout(std::chrono::milliseconds(static_cast<int>(timeout_s * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(static_cast<int>(timeout_s * 1000)));
    client.set_write_timeout(std::chrono::milliseconds(static_cast<int>(timeout_s * 1000)));

    httplib::Headers request_headers;
    for (const auto& [key, value] : headers) request_headers.emplace(key, value);

    httplib::Result result = client.Post(prefix + path, request_headers, body, "application/json");
    if (!result) return HttpResponse{0, ""};
    return HttpResponse{result->status, result->body};
  }
};

}  // namespace

std::shared_ptr<HttpTransport> make_httplib_transport() {
  return std::make_shared<HttplibTransport>();
}

Clock Clock::system() {
  Clock clock;
  clock.now_ms = []() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
  clock.sleep_ms = [](std::int64_t ms) {
    if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  };
  return clock;
}

TranscriptCache::TranscriptCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(file_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json record = nlohmann::json::parse(line);
    responses_[record.at("hash").get<std::uint64_t>()] = record.at("response").get<std::string>();
  }
}

std::optional<std::string> TranscriptCache::lookup(std::uint64_t request_hash) const {
  std::lock_guard<std::mutex> lock(mutex_);
  const auto it = responses_.find(request_hash);
  if (it == responses_.end()) return std::nullopt;
  return it->second;
}

void TranscriptCache::append(const TranscriptRecord& record) {
  std::lock_guard<std::mutex> lock(mutex_);
  nlohmann::json line = {
      {"hash", record.request_hash}, {"prompt", record.prompt},   {"params", record.params},
      {"response", record.response}, {"parsed", record.parsed},   {"ts", record.timestamp_ms},
      {"endpoint", record.endpoint},
  };
  std::ofstream out(file_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to transcript cache: " + file_.string());
  out << line.dump() << "\n";
  responses_[record.request_hash] = record.response;
}

std::size_t TranscriptCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return responses_.size();
}

std::uint64_t TranscriptCache::hash_request(const std::string& canonical) {
  // FNV-1a 64-bit.
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : canonical) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

LlmClient::LlmClient(EndpointConfig config, std::shared_ptr<HttpTransport> transport,
                     TranscriptCache* cache, Clock clock)
    : config_(std::move(config)), transport_(std::move(transport)), cache_(cache),
      clock_(std::move(clock)) {
  config_.validate();
  if (!transport_) throw std::invalid_argument("transport must not be null");
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw AuthError("API key environment variable not set: " + config_.api_key_env);
    api_key_ = key;
  }
}

std::string LlmClient::complete(const std::string& prompt, const std::vector<std::string>& stop,
                                int max_tokens, const nlohmann::json& cache_salt) {
  nlohmann::json params = {
      {"model", config_.model_name},
      {"temperature", config_.temperature},
      {"max_tokens", max_tokens},
      {"stop", stop},
      {"mode", to_string(config_.mode)},
      {"salt", cache_salt},
  };
  const std::uint64_t request_hash =
      TranscriptCache::hash_request(params.dump() + "\x1f" + prompt);

  if (cache_ != nullptr) {
    if (auto cached = cache_->lookup(request_hash)) return *cached;
  }

  nlohmann::json body;
  std::string path;
  if (config_.mode == SamplingMode::Completion) {
    path = "/completions";
    body = {{"model", config_.model_name},
            {"prompt", prompt},
            {"max_tokens", max_tokens},
            {"temperature", config_.temperature}};
  } else {
    path = "/chat/completions";
    body = {{"model", config_.model_name},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
            {"max_tokens", max_tokens},
            {"temperature", config_.temperature}};
  }
  if (!stop.empty()) body["stop"] = stop;

  std::vector<std::pair<std::string, std::string>> headers;
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);

  const std::string body_text = body.dump();
  int last_status = 0;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    // Rate limit: request starts are spaced by min_request_interval_ms.
    if (config_.min_request_interval_ms > 0) {
      std::int64_t scheduled;
      std::int64_t now;
      {
        std::lock_guard<std::mutex> lock(rate_mutex_);
        now = clock_.now_ms();
        scheduled = last_request_ms_ < 0
                        ? now
                        : std::max(now, last_request_ms_ + config_.min_request_interval_ms);
        last_request_ms_ = scheduled;
      }
      if (scheduled > now) clock_.sleep_ms(scheduled - now);
    }

    network_requests_.fetch_add(1);
    const HttpResponse response =
        transport_->post(config_.base_url, path, body_text, headers, config_.request_timeout_s);
    last_status = response.status;

    if (response.status == 401 || response.status == 403)
      throw AuthError("authentication failed (status " + std::to_string(response.status) + ")");

    if (response.status >= 200 && response.status < 300) {
      const nlohmann::json parsed_body = parse_body(response.body, response.status);
      std::string text = extract_text(parsed_body, config_.mode, response.status);
      if (cache_ != nullptr) {
        TranscriptRecord record;
        record.request_hash = request_hash;
        record.prompt = prompt;
        record.params = params;
        record.response = text;
        if (transcript_parser_) record.parsed = transcript_parser_(text);
        record.timestamp_ms = clock_.now_ms();
        record.endpoint = config_.base_url;
        cache_->append(record);
      }
      return text;
    }

    const bool retryable =
        response.status == 0 || response.status == 429 || response.status >= 500;
    if (!retryable)
      throw HttpError("request failed with status " + std::to_string(response.status),
                      response.status);
    if (attempt < config_.max_retries)
      clock_.sleep_ms(static_cast<std::int64_t>(config_.backoff_base_ms) << attempt);
  }
  throw HttpError("retries exhausted; last status " + std::to_string(last_status), last_status);
}

int estimated_tokens_per_sample(TaskKind kind) {
  switch (kind) {
    case TaskKind::Bernoulli: return 2;   // digit + separator
    case TaskKind::Gaussian: return 5;    // sign, digits, point, decimal, separator
    case TaskKind::NaturalLanguage: return 16;  // three-line record
  }
  throw std::logic_error("unreachable task kind");
}

RequestEstimate estimate_requests(const EndpointConfig& config, TaskKind kind, int path_length,
                                  int num_paths) {
  RequestEstimate estimate;
  const long tokens_per_path =
      static_cast<long>(path_length) * static_cast<long>(estimated_tokens_per_sample(kind));
  if (config.mode == SamplingMode::Chat) {
    estimate.requests = static_cast<long>(path_length) * num_paths;
  } else {
    const long per_path =
        (tokens_per_path + config.max_tokens_per_request - 1) / config.max_tokens_per_request;
    estimate.requests = std::max(1L, per_path) * num_paths;
  }
  estimate.completion_tokens = tokens_per_path * num_paths;
  return estimate;
}

RemoteLlmModel::RemoteLlmModel(TaskSpec task, PromptTemplate tmpl, std::shared_ptr<LlmClient> client)
    : task_(std::move(task)), tmpl_(std::move(tmpl)), client_(std::move(client)) {
  if (!client_) throw std::invalid_argument("client must not be null");
  task_.validate();
  const TaskKind kind = task_.kind;
  const PromptTemplate tmpl_copy = tmpl_;
  client_->set_transcript_parser([kind, tmpl_copy](const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos < text.size() && !only_padding(std::string_view(text).substr(pos), tmpl_copy)) {
      ParseOutcome outcome = parse_next_sample(std::string_view(text).substr(pos), kind, tmpl_copy);
      if (std::holds_alternative<ParseFailure>(outcome)) break;
      const auto& parsed = std::get<ParsedSample>(outcome);
      tokens.push_back(render_value_token(parsed.sample));
      pos += parsed.consumed;
    }
    return tokens;
  });
}

std::string RemoteLlmModel::name() const {
  return "remote:" + client_->config().model_name + ":" + to_string(client_->config().mode);
}

std::vector<Sample> RemoteLlmModel::sample_path(std::span<const Sample> observed, int length,
                                                RngStream& rng) const {
  ObservedDataset data;
  data.task = task_;
  data.samples.assign(observed.begin(), observed.end());
  if (client_->config().mode == SamplingMode::Completion)
    return sample_path_completion_mode(data, length, rng);
  return sample_path_chat_mode(data, length, rng);
}

std::vector<Sample> RemoteLlmModel::sample_path_completion_mode(const ObservedDataset& observed,
                                                                int length, RngStream& rng) const {
  std::vector<Sample> samples;
  if (length == 0) return samples;
  samples.reserve(static_cast<std::size_t>(length));
  const EndpointConfig& config = client_->config();
  const int tokens_per_sample = estimated_tokens_per_sample(task_.kind);
  int repairs = 0;
  long sequence = 0;

  while (static_cast<int>(samples.size()) < length) {
    const std::string prompt = render_prompt(tmpl_, task_, observed, samples);
    const int remaining = length - static_cast<int>(samples.size());
    const int want_tokens =
        std::min(config.max_tokens_per_request, remaining * tokens_per_sample + 4);
    std::string text;
    try {
      text = client_->complete(prompt, {}, want_tokens,
                               {{"root", rng.root_seed()}, {"stream", rng.stream_id()},
                                {"seq", sequence++}});
    } catch (const HttpError& error) {
      throw PathGenerationError(std::string("path request failed: ") + error.what(), samples, "");
    }

    std::size_t pos = 0;
    int parsed_here = 0;
    bool garbage = false;
    while (static_cast<int>(samples.size()) < length) {
      const std::string_view rest = std::string_view(text).substr(pos);
      if (only_padding(rest, tmpl_)) break;
      ParseOutcome outcome = parse_next_sample(rest, task_.kind, tmpl_);
      if (std::holds_alternative<ParseFailure>(outcome)) {
        // A token cut off by the response budget is routine; anything
        // else burns a repair attempt.
        garbage = !is_truncated_token(rest, task_.kind, tmpl_);
        break;
      }
      const auto& parsed = std::get<ParsedSample>(outcome);
      samples.push_back(parsed.sample);
      pos += parsed.consumed;
      ++parsed_here;
    }

    if (garbage || parsed_here == 0) {
      ++repairs;
      if (repairs > config.parse_repair_budget)
        throw PathGenerationError("parse repair budget exhausted", samples,
                                  text.substr(std::min(pos, text.size())));
    }
  }
  return samples;
}

std::vector<Sample> RemoteLlmModel::sample_path_chat_mode(const ObservedDataset& observed,
                                                          int length, RngStream& rng) const {
  std::vector<Sample> samples;
  if (length == 0) return samples;
  samples.reserve(static_cast<std::size_t>(length));
  const EndpointConfig& config = client_->config();
  const int want_tokens =
      std::min(config.max_tokens_per_request, estimated_tokens_per_sample(task_.kind) + 8);
  int repairs = 0;
  long sequence = 0;

  while (static_cast<int>(samples.size()) < length) {
    const std::string prompt = render_prompt(tmpl_, task_, observed, samples);
    std::string text;
    try {
      text = client_->complete(prompt, {}, want_tokens,
                               {{"root", rng.root_seed()}, {"stream", rng.stream_id()},
                                {"seq", sequence++}});
    } catch (const HttpError& error) {
      throw PathGenerationError(std::string("path request failed: ") + error.what(), samples, "");
    }
    // A single-sample request returning more than one sample contributes
    // only its first.
    ParseOutcome outcome = parse_next_sample(text, task_.kind, tmpl_);
    if (const auto* failure = std::get_if<ParseFailure>(&outcome)) {
      ++repairs;
      if (repairs > config.parse_repair_budget)
        throw PathGenerationError("parse repair budget exhausted", samples,
                                  failure->offending_prefix);
      continue;
    }
    samples.push_back(std::get<ParsedSample>(outcome).sample);
  }
  return samples;
}

}  // namespace mprobe
