#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace hintqa {

enum class Role { System, User, Assistant };

std::string_view to_string(Role r);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 256;
  std::optional<std::int64_t> seed;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

enum class FinishReason { Stop, Length, Other };

std::string_view to_string(FinishReason f);
FinishReason parse_finish_reason(std::string_view s);

struct ChatResponse {
  /// Raw assistant text, never trimmed.
  std::string content;
  FinishReason finish_reason = FinishReason::Stop;
  bool from_cache = false;
};

/// SHA-256 (lowercase hex) of the canonical request plus provider base URL.
struct CacheKey {
  std::string digest;

  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

/// Wire-shaped JSON body: {"model","messages","temperature","max_tokens"[,"seed"]}.
nlohmann::json to_json(const ChatRequest& req);
/// Sorted keys, no insignificant whitespace.
std::string canonical_serialize(const ChatRequest& req);
/// Human-readable dump of every message, used in diagnostics.
std::string render_request(const ChatRequest& req);

CacheKey chat_cache_key(const ChatRequest& req, std::string_view base_url);
CacheKey embedding_cache_key(std::string_view text, std::string_view model,
                             std::string_view base_url);

std::string sha256_hex(std::string_view data);

/// A chat/embedding backend. Implementations perform exactly one wire call
/// per invocation; caching and retry live in Gateway.
class Provider {
 public:
  virtual ~Provider() = default;

  /// Base URL (or pseudo-URL for offline providers); part of every cache key.
  virtual std::string endpoint() const = 0;
  virtual ChatResponse chat(const ChatRequest& req) = 0;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                                 const std::string& model) = 0;
};

struct HttpProviderOptions {
  std::string base_url;
  std::string api_key;
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{300};
};

/// OpenAI-compatible `/v1/chat/completions` and `/v1/embeddings` client.
/// Throws TransportError when no HTTP response arrives and ProviderError on
/// non-2xx status or an unreadable body.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(HttpProviderOptions options);

  std::string endpoint() const override { return options_.base_url; }
  ChatResponse chat(const ChatRequest& req) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& model) override;

 private:
  struct Url {
    std::string scheme_host_port;
    std::string path_prefix;
  };
  static Url split_url(const std::string& base_url);

  std::string post(const std::string& path, const std::string& body);

  HttpProviderOptions options_;
  Url url_;
};

/// Offline provider answering from an ordered list of rules; first match
/// wins. Unmatched requests raise ScriptMiss carrying the rendered request.
class ScriptedProvider final : public Provider {
 public:
  using ChatMatcher = std::function<bool(const ChatRequest&)>;
  using Embedder = std::function<std::vector<double>(std::string_view text)>;

  explicit ScriptedProvider(std::string endpoint = "scripted://default");

  /// Match when any message content contains `needle`.
  ScriptedProvider& on_contains(std::string needle, std::string response);
  ScriptedProvider& on(ChatMatcher matcher, std::string response);
  /// Embedding rule: texts containing `needle` map to `vector`.
  ScriptedProvider& on_embed_contains(std::string needle, std::vector<double> vector);
  /// Used for texts no embedding rule matches.
  ScriptedProvider& fallback_embedder(Embedder embedder);

  /// {"chat":[{"contains":s,"response":s}...],
  ///  "embeddings":[{"contains":s,"vector":[...]}...],
  ///  "hash_embedding_dim":n}
  static std::shared_ptr<ScriptedProvider> from_json(const nlohmann::json& script,
                                                     std::string endpoint = "scripted://file");

  std::string endpoint() const override { return endpoint_; }
  ChatResponse chat(const ChatRequest& req) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& model) override;

 private:
  struct ChatRule {
    ChatMatcher matches;
    std::string response;
  };
  struct EmbedRule {
    std::string needle;
    std::vector<double> vector;
  };

  std::string endpoint_;
  std::vector<ChatRule> chat_rules_;
  std::vector<EmbedRule> embed_rules_;
  Embedder fallback_;
};

/// Rule table in declaration order; the scripted provider is a pure
/// function of it.
struct Script {
  struct Entry {
    std::string contains;
    std::string response;
  };
  std::vector<Entry> chat;
};

std::shared_ptr<Provider> scripted_provider(const Script& script);

/// Write-once response store: `{dir}/{digest[0:2]}/{digest}.json` holding
/// `{request, response, timestamp}`. Concurrent writers of one key race on
/// an atomic hard link; exactly one file survives and every caller reads it.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::filesystem::path path_for(const CacheKey& key) const;
  /// The stored "response" object, or nullopt. Throws CacheCorrupt.
  std::optional<nlohmann::json> load(const CacheKey& key) const;
  /// Persist unless present; returns the response object that ended up on disk.
  nlohmann::json store(const CacheKey& key, const nlohmann::json& request,
                       const nlohmann::json& response) const;
  /// Number of entry files currently on disk.
  std::size_t entry_count() const;

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct RetryPolicy {
  /// Retries after the first attempt.
  int max_retries = 3;
  /// Delay before retry i (the last value repeats if shorter than max_retries).
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(1000),
                                                 std::chrono::milliseconds(2000),
                                                 std::chrono::milliseconds(4000)};

  /// Transport errors, HTTP 429 and 5xx.
  static bool retryable(const std::exception& e);
};

struct GatewayOptions {
  /// No on-disk cache when empty.
  std::optional<std::filesystem::path> cache_dir;
  std::size_t concurrency = 4;
  RetryPolicy retry;
};

/// Cached, retrying, concurrency-bounded front for a Provider. Safe to call
/// from many threads.
class Gateway {
 public:
  Gateway(std::shared_ptr<Provider> provider, GatewayOptions options = {});

  ChatResponse chat(const ChatRequest& req);
  /// One vector per text, same order, equal dimensions; cached per (text, model).
  /// Throws std::invalid_argument on an empty batch or an empty text.
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& model);

  /// Calls that reached the provider, counting every retry attempt.
  std::size_t provider_calls() const noexcept { return provider_calls_.load(); }
  std::size_t cache_hits() const noexcept { return cache_hits_.load(); }
  /// Highest number of simultaneous provider calls observed.
  std::size_t max_in_flight() const noexcept { return max_in_flight_.load(); }
  std::size_t concurrency() const noexcept { return options_.concurrency; }
  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  template <typename Fn>
  auto call_provider(Fn&& fn) -> decltype(fn());

  std::shared_ptr<Provider> provider_;
  GatewayOptions options_;
  std::string endpoint_;
  std::optional<ResponseCache> cache_;
  std::counting_semaphore<> slots_;
  std::atomic<std::size_t> provider_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
};

}  // namespace hintqa
