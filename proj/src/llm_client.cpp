#include "graphtext/llm_client.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "graphtext/digest.hpp"
#include "graphtext/errors.hpp"
#include "graphtext/manifest.hpp"
#include "graphtext/text_util.hpp"
#include "graphtext/tokenize.hpp"

namespace graphtext {

namespace {

constexpr std::string_view kContentMarker = "Here is the content: ";
constexpr std::string_view kRefinePrefix = "Please generate a refined document";
constexpr std::string_view kExtractPrefix = "You are a knowledge graph extractor";

std::string escape_field(const std::string& field) {
  std::string out;
  out.reserve(field.size());
  for (char c : field) {
    if (c == '\'' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string cache_key(const CompletionRequest& request) {
  // Fixed serialization of exactly (model_name, temperature, prompt);
  // temperature uses the shortest round-trip decimal form.
  std::string material = "v1\x1f" + request.model_name + "\x1f" +
                         format_double(request.temperature) + "\x1f" +
                         request.prompt;
  return sha256_hex(material);
}

ClientConfig load_client_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open config file: " + path.string());
  }
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw FormatError("config file is not a JSON object: " + path.string());
  }
  ClientConfig config;
  if (doc.contains("model")) config.model_name = doc["model"].get<std::string>();
  if (doc.contains("endpoint")) config.endpoint = doc["endpoint"].get<std::string>();
  if (doc.contains("api_key_env")) config.api_key_env = doc["api_key_env"].get<std::string>();
  if (doc.contains("message_role")) config.message_role = doc["message_role"].get<std::string>();
  if (doc.contains("temperature")) config.temperature = doc["temperature"].get<double>();
  if (doc.contains("requests_per_minute")) config.requests_per_minute = doc["requests_per_minute"].get<int>();
  if (doc.contains("max_attempts")) config.max_attempts = doc["max_attempts"].get<int>();
  if (doc.contains("backoff_ms")) config.backoff_ms = doc["backoff_ms"].get<int>();
  if (doc.contains("timeout_s")) config.timeout_s = doc["timeout_s"].get<int>();
  if (doc.contains("workers")) config.workers = doc["workers"].get<int>();
  if (doc.contains("mock_stride")) config.mock_stride = doc["mock_stride"].get<int>();
  return config;
}

std::string mock_extract(std::string_view refined, int stride) {
  if (refined.empty()) {
    throw ArgumentError("mock_extract needs non-empty text");
  }
  if (stride < 1) {
    throw ArgumentError("mock_extract stride must be positive");
  }
  const auto tokens = tokenize(refined);
  if (tokens.size() < 3) return "None";
  std::string out;
  for (std::size_t i = 0; i + 3 <= tokens.size();
       i += static_cast<std::size_t>(stride)) {
    if (!out.empty()) out.push_back('\n');
    out += "('" + escape_field(tokens[i]) + "', '" +
           escape_field(tokens[i + 1]) + "', '" + escape_field(tokens[i + 2]) +
           "')";
  }
  return out;
}

void MockCompleter::load_fixtures(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open fixtures file: " + path.string());
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("response") ||
        (!record.contains("doc_id") && !record.contains("key"))) {
      throw FormatError("malformed fixture at line " + std::to_string(line_no) +
                        " of " + path.string());
    }
    if (record.contains("doc_id")) {
      by_doc_[record["doc_id"].get<std::string>()] =
          record["response"].get<std::string>();
    } else {
      by_key_[record["key"].get<std::string>()] =
          record["response"].get<std::string>();
    }
  }
}

void MockCompleter::add_fixture_for_doc(const std::string& doc_id,
                                        std::string response) {
  by_doc_[doc_id] = std::move(response);
}

void MockCompleter::add_fixture_for_key(const std::string& key,
                                        std::string response) {
  by_key_[key] = std::move(response);
}

std::string MockCompleter::complete(const CompletionRequest& request,
                                    std::string_view doc_hint) {
  calls_.fetch_add(1);
  if (!doc_hint.empty()) {
    auto it = by_doc_.find(std::string(doc_hint));
    if (it != by_doc_.end()) return it->second;
  }
  auto it = by_key_.find(cache_key(request));
  if (it != by_key_.end()) return it->second;

  const std::string& prompt = request.prompt;
  const auto marker = prompt.rfind(kContentMarker);
  if (marker != std::string::npos) {
    const std::string content = prompt.substr(marker + kContentMarker.size());
    if (prompt.rfind(kRefinePrefix, 0) == 0) return content;
    if (prompt.rfind(kExtractPrefix, 0) == 0) {
      return mock_extract(content, stride_);
    }
  }
  throw ProtocolError("mock completer has no fixture for this request");
}

HttpCompleter::HttpCompleter(const ClientConfig& config) : config_(config) {
  const auto& url = config.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ArgumentError("endpoint is not a URL: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_ = url;
    path_ = "/";
  } else {
    scheme_host_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
  if (!config.api_key_env.empty()) {
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw CredentialError("credential environment variable " +
                            config.api_key_env + " is not set");
    }
    api_key_ = key;
  }
}

std::string HttpCompleter::parse_response_body(const std::string& body) {
  nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) {
    throw ProtocolError("provider response is not JSON");
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() ||
      doc["choices"].empty()) {
    throw ProtocolError("provider response has no choices");
  }
  const auto& first = doc["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw ProtocolError("provider response is missing message content");
  }
  return first["message"]["content"].get<std::string>();
}

std::string HttpCompleter::complete(const CompletionRequest& request,
                                    std::string_view) {
  httplib::Client client(scheme_host_);
  client.set_connection_timeout(config_.timeout_s, 0);
  client.set_read_timeout(config_.timeout_s, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }
  nlohmann::json payload{
      {"model", request.model_name},
      {"temperature", request.temperature},
      {"messages",
       nlohmann::json::array(
           {{{"role", config_.message_role}, {"content", request.prompt}}})}};

  auto result = client.Post(path_, headers, payload.dump(), "application/json");
  if (!result) {
    throw TransportError("provider unreachable: " +
                         httplib::to_string(result.error()));
  }
  if (result->status == 401 || result->status == 403) {
    throw CredentialError("provider rejected credential (HTTP " +
                          std::to_string(result->status) + ")");
  }
  if (result->status == 429 || result->status >= 500) {
    throw TransportError("provider transient failure (HTTP " +
                         std::to_string(result->status) + ")");
  }
  if (result->status != 200) {
    throw ProtocolError("provider returned HTTP " +
                        std::to_string(result->status) + ": " + result->body);
  }
  return parse_response_body(result->body);
}

ResponseCache::ResponseCache(std::filesystem::path path)
    : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;  // cold cache
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("key") ||
        !record.contains("response")) {
      throw FormatError("malformed cache record at line " +
                        std::to_string(line_no) + " of " + path_.string());
    }
    index_[record["key"].get<std::string>()] =
        record["response"].get<std::string>();
  }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::store(const std::string& key, const std::string& response) {
  std::lock_guard lock(mutex_);
  if (index_.contains(key)) return;
  index_[key] = response;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) {
    throw FormatError("cannot append to cache file: " + path_.string());
  }
  nlohmann::json record{{"key", key},
                        {"response", response},
                        {"ts", utc_now_iso8601()}};
  out << record.dump() << '\n';
  out.flush();
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return index_.size();
}

RateLimiter::RateLimiter(int requests_per_minute)
    : capacity_(requests_per_minute > 0 ? requests_per_minute : 0),
      tokens_(capacity_),
      per_second_(capacity_ / 60.0),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (capacity_ <= 0) return;  // disabled
  std::unique_lock lock(mutex_);
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    tokens_ = std::min(
        capacity_,
        tokens_ + per_second_ * std::chrono::duration<double>(now - last_).count());
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait_s = (1.0 - tokens_) / per_second_;
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
    lock.lock();
  }
}

CachingClient::CachingClient(std::unique_ptr<Completer> provider,
                             ClientConfig config,
                             std::optional<std::filesystem::path> cache_path)
    : provider_(std::move(provider)),
      config_(std::move(config)),
      limiter_(config_.requests_per_minute) {
  if (cache_path) cache_.emplace(*cache_path);
}

CompletionRequest CachingClient::make_request(std::string prompt) const {
  return CompletionRequest{config_.model_name, config_.temperature,
                           std::move(prompt)};
}

std::string CachingClient::call_provider(const CompletionRequest& request,
                                         std::string_view doc_hint) {
  int attempt = 0;
  for (;;) {
    ++attempt;
    try {
      limiter_.acquire();
      provider_calls_.fetch_add(1);
      return provider_->complete(request, doc_hint);
    } catch (const TransportError&) {
      if (attempt >= config_.max_attempts) throw;
      const auto delay =
          std::chrono::milliseconds(config_.backoff_ms) * (1 << (attempt - 1));
      std::this_thread::sleep_for(delay);
    }
  }
}

std::string CachingClient::complete(const CompletionRequest& request,
                                    std::string_view doc_hint) {
  const std::string key = cache_key(request);

  std::unique_lock lock(mutex_);
  if (cache_) {
    if (auto hit = cache_->lookup(key)) {
      cache_hits_.fetch_add(1);
      return *hit;
    }
  }
  if (auto it = in_flight_.find(key); it != in_flight_.end()) {
    auto fut = it->second;
    lock.unlock();
    return fut.get();  // rethrows the leader's failure
  }
  std::promise<std::string> promise;
  auto fut = promise.get_future().share();
  in_flight_.emplace(key, fut);
  lock.unlock();

  try {
    std::string response = call_provider(request, doc_hint);
    if (cache_) cache_->store(key, response);
    lock.lock();
    in_flight_.erase(key);
    lock.unlock();
    promise.set_value(response);
    return response;
  } catch (...) {
    lock.lock();
    in_flight_.erase(key);
    lock.unlock();
    promise.set_exception(std::current_exception());
    throw;
  }
}

std::vector<std::optional<std::string>> for_each_parallel(
    std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::optional<std::string>> errors(n);
  if (n == 0) return errors;
  const int pool = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      } catch (...) {
        errors[i] = "unknown error";
      }
    }
  };
  if (pool == 1) {
    run();
    return errors;
  }
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(pool));
  for (int t = 0; t < pool; ++t) threads.emplace_back(run);
  for (auto& t : threads) t.join();
  return errors;
}

}  // namespace graphtext
