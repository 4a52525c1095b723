#pragma once

// Network adapter that turns an OpenAI-compatible completions or chat
// endpoint into a SequentialPredictiveModel: request construction, retry
// and rate-limit policy, append-only transcript caching, and the two
// path-sampling modes (one free-form continuation vs one sample per
// request).

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mprobe/models.hpp"
#include "mprobe/prompts.hpp"
#include "mprobe/sampler.hpp"

namespace mprobe {

enum class SamplingMode { Completion, Chat };

std::string to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& name);

struct EndpointConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "MARTINGALE_PROBE_API_KEY";  // empty: no auth header
  std::string model_name = "gpt-3.5-turbo-instruct";
  double temperature = 1.0;
  int max_tokens_per_request = 256;
  SamplingMode mode = SamplingMode::Completion;
  double request_timeout_s = 60.0;
  int max_retries = 5;
  int min_request_interval_ms = 0;
  int backoff_base_ms = 500;
  int parse_repair_budget = 5;  // repair attempts per path
  void validate() const;
};

struct HttpResponse {
  int status = 0;  // 0: transport failure
  std::string body;
};

// Transport seam; tests substitute scripted mocks, production uses
// HttplibTransport. Implementations must be callable from worker threads.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& base_url, const std::string& path,
                            const std::string& body,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            double timeout_s) = 0;
};

std::shared_ptr<HttpTransport> make_httplib_transport();

// Injectable time source so retry backoff and rate limiting are testable.
struct Clock {
  std::function<std::int64_t()> now_ms;
  std::function<void(std::int64_t)> sleep_ms;
  static Clock system();
};

struct TranscriptRecord {
  std::uint64_t request_hash = 0;
  std::string prompt;
  nlohmann::json params;
  std::string response;
  std::vector<std::string> parsed;
  std::int64_t timestamp_ms = 0;
  std::string endpoint;
};

// Append-only JSONL transcript, one record per request, keyed by the
// request hash. A populated cache makes reruns byte-identical with zero
// network traffic.
class TranscriptCache {
 public:
  explicit TranscriptCache(std::filesystem::path file);

  std::optional<std::string> lookup(std::uint64_t request_hash) const;
  void append(const TranscriptRecord& record);
  std::size_t size() const;

  static std::uint64_t hash_request(const std::string& canonical);

 private:
  std::filesystem::path file_;
  std::map<std::uint64_t, std::string> responses_;
  mutable std::mutex mutex_;
};

class AuthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HttpError : public std::runtime_error {
 public:
  HttpError(const std::string& message, int status) : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_ = 0;
};

// One endpoint with retry, rate limiting and caching. Thread safe; paths
// may issue requests concurrently while each path stays sequential.
class LlmClient {
 public:
  LlmClient(EndpointConfig config, std::shared_ptr<HttpTransport> transport,
            TranscriptCache* cache = nullptr, Clock clock = Clock::system());

  // Issues one completion/chat request for `prompt`. cache_salt is
  // hashed together with the prompt and sampling parameters so that
  // distinct stochastic draws (different paths or sequence positions) do
  // not collide in the transcript cache.
  std::string complete(const std::string& prompt, const std::vector<std::string>& stop,
                       int max_tokens, const nlohmann::json& cache_salt);

  int network_requests() const { return network_requests_; }
  const EndpointConfig& config() const { return config_; }

  // Fills the transcript record's parsed-samples column for audit; the
  // remote model installs a task-aware parser.
  void set_transcript_parser(std::function<std::vector<std::string>(const std::string&)> parser) {
    transcript_parser_ = std::move(parser);
  }

 private:
  EndpointConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  TranscriptCache* cache_;
  Clock clock_;
  std::string api_key_;
  std::function<std::vector<std::string>(const std::string&)> transcript_parser_;
  std::mutex rate_mutex_;
  std::int64_t last_request_ms_ = -1;
  std::atomic<int> network_requests_{0};
};

int estimated_tokens_per_sample(TaskKind kind);

// Dry-run accounting: requests per path and a token estimate for a whole
// ensemble, before any network call.
struct RequestEstimate {
  long requests = 0;
  long completion_tokens = 0;
};
RequestEstimate estimate_requests(const EndpointConfig& config, TaskKind kind, int path_length,
                                  int num_paths);

// Remote model speaking the prompt format of `tmpl`. Completion mode
// requests blocks of samples and repairs parse failures by re-rendering
// from the valid prefix; chat mode issues exactly one request per sample.
class RemoteLlmModel final : public SequentialPredictiveModel {
 public:
  RemoteLlmModel(TaskSpec task, PromptTemplate tmpl, std::shared_ptr<LlmClient> client);

  TaskKind kind() const override { return task_.kind; }
  std::string name() const override;
  std::vector<Sample> sample_path(std::span<const Sample> observed, int length,
                                  RngStream& rng) const override;

 private:
  std::vector<Sample> sample_path_completion_mode(const ObservedDataset& observed, int length,
                                                  RngStream& rng) const;
  std::vector<Sample> sample_path_chat_mode(const ObservedDataset& observed, int length,
                                            RngStream& rng) const;

  TaskSpec task_;
  PromptTemplate tmpl_;
  std::shared_ptr<LlmClient> client_;
};

}  // namespace mprobe
