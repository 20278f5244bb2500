#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace graphtext {

struct CompletionRequest {
  std::string model_name;
  double temperature = 0.0;
  std::string prompt;
};

/// Cache key: SHA-256 over exactly (model_name, temperature, prompt) in a
/// fixed serialization. Changing any one field changes the key.
std::string cache_key(const CompletionRequest& request);

/// Provider connection settings; flags > config file > these defaults.
struct ClientConfig {
  std::string model_name = "gpt-3.5-turbo";
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "GRAPHTEXT_API_KEY";
  std::string message_role = "user";
  double temperature = 0.0;
  int requests_per_minute = 60;  // 0 disables rate limiting
  int max_attempts = 3;
  int backoff_ms = 250;
  int timeout_s = 120;
  int workers = 4;
  int mock_stride = 3;
};

ClientConfig load_client_config(const std::filesystem::path& path);

/// Raw completion provider. doc_hint carries the document id for fixture
/// lookup in mocks; it never enters the cache key.
class Completer {
 public:
  virtual ~Completer() = default;
  virtual std::string complete(const CompletionRequest& request,
                               std::string_view doc_hint) = 0;
};

/// Deterministic trigram extraction stand-in for the real extractor: emits
/// consecutive token trigrams at the given stride as triplet lines, or
/// "None" when fewer than three tokens survive tokenization.
std::string mock_extract(std::string_view refined, int stride);

/// Offline provider. Resolution order: fixture by doc_hint, fixture by cache
/// key, then built-in behavior — identity for refinement prompts and
/// mock_extract for extraction prompts. Counts every call.
class MockCompleter : public Completer {
 public:
  explicit MockCompleter(int stride = 3) : stride_(stride) {}

  /// Fixture file: JSONL mapping "doc_id" or "key" to "response".
  void load_fixtures(const std::filesystem::path& path);
  void add_fixture_for_doc(const std::string& doc_id, std::string response);
  void add_fixture_for_key(const std::string& key, std::string response);

  std::string complete(const CompletionRequest& request,
                       std::string_view doc_hint) override;

  int calls() const { return calls_.load(); }

 private:
  int stride_;
  std::atomic<int> calls_{0};
  std::unordered_map<std::string, std::string> by_doc_;
  std::unordered_map<std::string, std::string> by_key_;
};

/// Chat-completion HTTPS provider (single user message). Auth failures raise
/// CredentialError, malformed bodies ProtocolError, connection failures
/// TransportError; only transport-class failures are worth retrying.
class HttpCompleter : public Completer {
 public:
  explicit HttpCompleter(const ClientConfig& config);
  std::string complete(const CompletionRequest& request,
                       std::string_view doc_hint) override;

  /// Extracts the message text from a chat-completion response body.
  static std::string parse_response_body(const std::string& body);

 private:
  ClientConfig config_;
  std::string scheme_host_;
  std::string path_;
  std::string api_key_;
};

/// Append-only JSONL response cache with an in-memory index.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path path);

  std::optional<std::string> lookup(const std::string& key) const;
  void store(const std::string& key, const std::string& response);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> index_;
};

/// Token-bucket limiter; acquire() blocks until a token is available.
class RateLimiter {
 public:
  explicit RateLimiter(int requests_per_minute);
  void acquire();

 private:
  double capacity_;
  double tokens_;
  double per_second_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mutex_;
};

/// Cache-first completion with retry, backoff, rate limiting, and a per-key
/// in-flight guard: concurrent identical requests cause one provider call.
/// Errors are never cached.
class CachingClient {
 public:
  CachingClient(std::unique_ptr<Completer> provider, ClientConfig config,
                std::optional<std::filesystem::path> cache_path);

  std::string complete(const CompletionRequest& request,
                       std::string_view doc_hint = {});

  CompletionRequest make_request(std::string prompt) const;

  std::int64_t cache_hits() const { return cache_hits_.load(); }
  std::int64_t provider_calls() const { return provider_calls_.load(); }
  const ClientConfig& config() const { return config_; }

 private:
  std::string call_provider(const CompletionRequest& request,
                            std::string_view doc_hint);

  std::unique_ptr<Completer> provider_;
  ClientConfig config_;
  std::optional<ResponseCache> cache_;
  RateLimiter limiter_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::shared_future<std::string>> in_flight_;
  std::atomic<std::int64_t> cache_hits_{0};
  std::atomic<std::int64_t> provider_calls_{0};
};

/// Runs fn(0..n-1) on a bounded pool; exceptions are collected per index so
/// one failed item never aborts the batch.
std::vector<std::optional<std::string>> for_each_parallel(
    std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace graphtext
