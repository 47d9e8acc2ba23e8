#include "hintqa/gateway.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <unistd.h>

#include <openssl/evp.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "hintqa/errors.hpp"
#include "hintqa/similarity.hpp"
#include "util.hpp"

namespace hintqa {
namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::Assistant: return "assistant";
    case Role::User: break;
  }
  return "user";
}

std::string_view to_string(FinishReason f) {
  switch (f) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Other: break;
  }
  return "other";
}

FinishReason parse_finish_reason(std::string_view s) {
  if (s == "stop") return FinishReason::Stop;
  if (s == "length") return FinishReason::Length;
  return FinishReason::Other;
}

json to_json(const ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  json j = {{"model", req.model},
            {"messages", std::move(messages)},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens}};
  if (req.seed) j["seed"] = *req.seed;
  return j;
}

std::string canonical_serialize(const ChatRequest& req) { return to_json(req).dump(); }

std::string render_request(const ChatRequest& req) {
  std::ostringstream out;
  out << "model: " << req.model << "\n";
  for (const auto& m : req.messages) {
    out << "[" << to_string(m.role) << "]\n" << m.content << "\n";
  }
  return out.str();
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

namespace {

json chat_envelope(const ChatRequest& req, std::string_view base_url) {
  return {{"base_url", base_url}, {"kind", "chat"}, {"request", to_json(req)}};
}

json embedding_envelope(std::string_view text, std::string_view model,
                        std::string_view base_url) {
  return {{"base_url", base_url}, {"kind", "embedding"}, {"model", model}, {"input", text}};
}

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ChatResponse chat_response_from_json(const json& j) {
  ChatResponse r;
  r.content = j.at("content").get<std::string>();
  r.finish_reason = parse_finish_reason(j.value("finish_reason", "stop"));
  return r;
}

json to_json(const ChatResponse& r) {
  return {{"content", r.content}, {"finish_reason", to_string(r.finish_reason)}};
}

}  // namespace

CacheKey chat_cache_key(const ChatRequest& req, std::string_view base_url) {
  return {sha256_hex(chat_envelope(req, base_url).dump())};
}

CacheKey embedding_cache_key(std::string_view text, std::string_view model,
                             std::string_view base_url) {
  return {sha256_hex(embedding_envelope(text, model, base_url).dump())};
}

// ---------------------------------------------------------------------------
// ResponseCache

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

fs::path ResponseCache::path_for(const CacheKey& key) const {
  return dir_ / key.digest.substr(0, 2) / (key.digest + ".json");
}

std::optional<json> ResponseCache::load(const CacheKey& key) const {
  auto path = path_for(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    auto j = json::parse(in);
    if (!j.is_object() || !j.contains("response")) throw CacheCorrupt(key.digest);
    return j.at("response");
  } catch (const json::exception&) {
    throw CacheCorrupt(key.digest);
  }
}

json ResponseCache::store(const CacheKey& key, const json& request, const json& response) const {
  auto final_path = path_for(key);
  if (auto existing = load(key)) return *existing;

  fs::create_directories(final_path.parent_path());
  static std::atomic<unsigned long> counter{0};
  auto tmp = final_path.parent_path() /
             ("." + key.digest + "." + std::to_string(::getpid()) + "." +
              std::to_string(counter++) + ".tmp");
  json entry = {{"request", request}, {"response", response}, {"timestamp", utc_timestamp()}};
  detail::write_file(tmp, entry.dump(2) + "\n");

  // link() refuses to replace an existing file, so the first writer wins.
  std::error_code ec;
  fs::create_hard_link(tmp, final_path, ec);
  if (ec && ec != std::errc::file_exists) {
    std::error_code rename_ec;
    if (!fs::exists(final_path)) fs::rename(tmp, final_path, rename_ec);
  }
  fs::remove(tmp, ec);

  auto persisted = load(key);
  if (!persisted) throw CacheCorrupt(key.digest);
  return *persisted;
}

std::size_t ResponseCache::entry_count() const {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir_)) {
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        e.path().filename().string().front() != '.') {
      ++n;
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// Retry

bool RetryPolicy::retryable(const std::exception& e) {
  if (dynamic_cast<const TransportError*>(&e) != nullptr) return true;
  if (const auto* pe = dynamic_cast<const ProviderError*>(&e)) {
    return pe->status() == 429 || pe->status() >= 500;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<Provider> provider, GatewayOptions options)
    : provider_(std::move(provider)),
      options_(std::move(options)),
      slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options_.concurrency))) {
  if (!provider_) throw std::invalid_argument("gateway needs a provider");
  options_.concurrency = std::max<std::size_t>(1, options_.concurrency);
  endpoint_ = provider_->endpoint();
  if (options_.cache_dir) cache_.emplace(*options_.cache_dir);
}

template <typename Fn>
auto Gateway::call_provider(Fn&& fn) -> decltype(fn()) {
  const auto& retry = options_.retry;
  for (int attempt = 0;; ++attempt) {
    try {
      slots_.acquire();
      struct Release {
        Gateway* g;
        ~Release() {
          --g->in_flight_;
          g->slots_.release();
        }
      } release{this};
      auto now = ++in_flight_;
      auto prev = max_in_flight_.load();
      while (now > prev && !max_in_flight_.compare_exchange_weak(prev, now)) {
      }
      ++provider_calls_;
      return fn();
    } catch (const GatewayError& e) {
      if (attempt >= retry.max_retries || !RetryPolicy::retryable(e)) throw;
      if (!retry.backoff.empty()) {
        auto idx = std::min<std::size_t>(static_cast<std::size_t>(attempt), retry.backoff.size() - 1);
        std::this_thread::sleep_for(retry.backoff[idx]);
      }
    }
  }
}

ChatResponse Gateway::chat(const ChatRequest& req) {
  if (req.messages.empty()) throw std::invalid_argument("chat request without messages");

  std::optional<CacheKey> key;
  if (cache_) {
    key = chat_cache_key(req, endpoint_);
    if (auto hit = cache_->load(*key)) {
      ++cache_hits_;
      auto r = chat_response_from_json(*hit);
      r.from_cache = true;
      return r;
    }
  }

  auto fresh = call_provider([&] { return provider_->chat(req); });
  if (!cache_) return fresh;

  auto persisted = cache_->store(*key, chat_envelope(req, endpoint_), to_json(fresh));
  auto r = chat_response_from_json(persisted);
  r.from_cache = false;
  return r;
}

std::vector<std::vector<double>> Gateway::embed(const std::vector<std::string>& texts,
                                                const std::string& model) {
  if (texts.empty()) throw std::invalid_argument("embed: empty batch");
  for (const auto& t : texts) {
    if (t.empty()) throw std::invalid_argument("embed: empty text in batch");
  }

  std::unordered_map<std::string, std::vector<double>> resolved;
  std::vector<std::string> misses;
  for (const auto& t : texts) {
    if (resolved.contains(t) ||
        std::find(misses.begin(), misses.end(), t) != misses.end()) {
      continue;
    }
    if (cache_) {
      if (auto hit = cache_->load(embedding_cache_key(t, model, endpoint_))) {
        ++cache_hits_;
        resolved.emplace(t, hit->at("embedding").get<std::vector<double>>());
        continue;
      }
    }
    misses.push_back(t);
  }

  if (!misses.empty()) {
    auto vectors = call_provider([&] { return provider_->embed(misses, model); });
    if (vectors.size() != misses.size()) {
      throw GatewayError("embedding provider returned " + std::to_string(vectors.size()) +
                         " vectors for " + std::to_string(misses.size()) + " inputs");
    }
    for (std::size_t i = 0; i < misses.size(); ++i) {
      if (cache_) {
        auto key = embedding_cache_key(misses[i], model, endpoint_);
        auto persisted = cache_->store(key, embedding_envelope(misses[i], model, endpoint_),
                                       json{{"embedding", vectors[i]}});
        resolved.emplace(misses[i], persisted.at("embedding").get<std::vector<double>>());
      } else {
        resolved.emplace(misses[i], std::move(vectors[i]));
      }
    }
  }

  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(resolved.at(t));
  for (const auto& v : out) {
    if (v.empty() || v.size() != out.front().size()) {
      throw GatewayError("embedding dimensions differ within one batch");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// HttpProvider

HttpProvider::HttpProvider(HttpProviderOptions options)
    : options_(std::move(options)), url_(split_url(options_.base_url)) {}

HttpProvider::Url HttpProvider::split_url(const std::string& base_url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(base_url, m, re)) {
    throw ConfigError("base URL must look like http(s)://host[:port][/prefix]: " + base_url);
  }
  std::string prefix = m[2].matched ? m[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

std::string HttpProvider::post(const std::string& path, const std::string& body) {
  httplib::Client cli(url_.scheme_host_port);
  cli.set_connection_timeout(options_.connect_timeout);
  cli.set_read_timeout(options_.read_timeout);
  cli.set_write_timeout(options_.read_timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }
  auto res = cli.Post(url_.path_prefix + path, headers, body, "application/json");
  if (!res) {
    throw TransportError(url_.scheme_host_port + url_.path_prefix + path + ": " +
                         httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) throw ProviderError(res->status, res->body);
  return res->body;
}

ChatResponse HttpProvider::chat(const ChatRequest& req) {
  auto body = post("/v1/chat/completions", canonical_serialize(req));
  auto j = json::parse(body, nullptr, false);
  try {
    const auto& choice = j.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    ChatResponse r;
    r.content = content.is_null() ? std::string() : content.get<std::string>();
    auto fr = choice.find("finish_reason");
    r.finish_reason = (fr != choice.end() && fr->is_string())
                          ? parse_finish_reason(fr->get<std::string>())
                          : FinishReason::Other;
    return r;
  } catch (const json::exception&) {
    throw ProviderError(200, "unreadable chat completion body: " + body);
  }
}

std::vector<std::vector<double>> HttpProvider::embed(const std::vector<std::string>& texts,
                                                     const std::string& model) {
  json req = {{"model", model}, {"input", texts}};
  auto body = post("/v1/embeddings", req.dump());
  auto j = json::parse(body, nullptr, false);
  try {
    const auto& data = j.at("data");
    std::vector<std::vector<double>> out(texts.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      // Providers may tag entries with an explicit index.
      auto idx = data[i].value("index", i);
      if (idx >= out.size()) throw ProviderError(200, "embedding index out of range: " + body);
      out[idx] = data[i].at("embedding").get<std::vector<double>>();
    }
    if (data.size() != texts.size()) {
      throw ProviderError(200, "embedding count mismatch: " + body);
    }
    return out;
  } catch (const json::exception&) {
    throw ProviderError(200, "unreadable embeddings body: " + body);
  }
}

// ---------------------------------------------------------------------------
// ScriptedProvider

ScriptedProvider::ScriptedProvider(std::string endpoint) : endpoint_(std::move(endpoint)) {}

ScriptedProvider& ScriptedProvider::on_contains(std::string needle, std::string response) {
  return on(
      [needle = std::move(needle)](const ChatRequest& req) {
        return std::any_of(req.messages.begin(), req.messages.end(), [&](const ChatMessage& m) {
          return m.content.find(needle) != std::string::npos;
        });
      },
      std::move(response));
}

ScriptedProvider& ScriptedProvider::on(ChatMatcher matcher, std::string response) {
  chat_rules_.push_back({std::move(matcher), std::move(response)});
  return *this;
}

ScriptedProvider& ScriptedProvider::on_embed_contains(std::string needle,
                                                      std::vector<double> vector) {
  embed_rules_.push_back({std::move(needle), std::move(vector)});
  return *this;
}

ScriptedProvider& ScriptedProvider::fallback_embedder(Embedder embedder) {
  fallback_ = std::move(embedder);
  return *this;
}

std::shared_ptr<ScriptedProvider> ScriptedProvider::from_json(const json& script,
                                                              std::string endpoint) {
  auto p = std::make_shared<ScriptedProvider>(std::move(endpoint));
  try {
    for (const auto& rule : script.value("chat", json::array())) {
      p->on_contains(rule.at("contains").get<std::string>(),
                     rule.at("response").get<std::string>());
    }
    for (const auto& rule : script.value("embeddings", json::array())) {
      p->on_embed_contains(rule.at("contains").get<std::string>(),
                           rule.at("vector").get<std::vector<double>>());
    }
    if (auto dim = script.find("hash_embedding_dim"); dim != script.end()) {
      auto n = dim->get<std::size_t>();
      p->fallback_embedder([n](std::string_view t) { return hash_embedding(t, n); });
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed provider script: ") + e.what());
  }
  return p;
}

ChatResponse ScriptedProvider::chat(const ChatRequest& req) {
  for (const auto& rule : chat_rules_) {
    if (rule.matches(req)) return {rule.response, FinishReason::Stop, false};
  }
  throw ScriptMiss(render_request(req));
}

std::vector<std::vector<double>> ScriptedProvider::embed(const std::vector<std::string>& texts,
                                                         const std::string& model) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto rule = std::find_if(embed_rules_.begin(), embed_rules_.end(), [&](const EmbedRule& r) {
      return t.find(r.needle) != std::string::npos;
    });
    if (rule != embed_rules_.end()) {
      out.push_back(rule->vector);
    } else if (fallback_) {
      out.push_back(fallback_(t));
    } else {
      throw ScriptMiss("embedding model: " + model + "\ninput: " + t + "\n");
    }
  }
  return out;
}

std::shared_ptr<Provider> scripted_provider(const Script& script) {
  auto p = std::make_shared<ScriptedProvider>();
  for (const auto& e : script.chat) p->on_contains(e.contains, e.response);
  return p;
}

}  // namespace hintqa
