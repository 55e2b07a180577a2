#include "wordalise/llmgateway.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <httplib.h>

#include "wordalise/error.hpp"

namespace wordalise {

using nlohmann::json;

namespace {

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

std::optional<std::string> env(const char* name) {
  if (const char* v = std::getenv(name); v && *v) return std::string(v);
  return std::nullopt;
}

bool is_transient(Errc code) {
  return code == Errc::Timeout || code == Errc::TransportError || code == Errc::RateLimited;
}

}  // namespace

ProviderConfig provider_config_from_json(const json& j, ProviderConfig c) {
  if (!j.is_object()) return c;
  c.base_url = j.value("base_url", c.base_url);
  c.model_name = j.value("model_name", c.model_name);
  c.embedding_model = j.value("embedding_model", c.embedding_model);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  if (j.contains("temperature") && !j["temperature"].is_null()) c.temperature = j["temperature"].get<double>();
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  if (j.contains("timeout_ms")) c.timeout = std::chrono::milliseconds(j["timeout_ms"].get<long>());
  c.max_retries = j.value("max_retries", c.max_retries);
  if (j.contains("retry_base_delay_ms")) c.retry_base_delay = std::chrono::milliseconds(j["retry_base_delay_ms"].get<long>());
  c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
  c.log_requests = j.value("log_requests", c.log_requests);
  return c;
}

ProviderConfig provider_config_from_env(ProviderConfig c) {
  if (auto v = env("WORDALISE_BASE_URL")) c.base_url = *v;
  if (auto v = env("WORDALISE_MODEL")) c.model_name = *v;
  if (auto v = env("WORDALISE_EMBEDDING_MODEL")) c.embedding_model = *v;
  if (auto v = env("WORDALISE_API_KEY_ENV")) c.api_key_env = *v;
  return c;
}

void validate(const ProviderConfig& cfg) {
  if (cfg.temperature && (!std::isfinite(*cfg.temperature) || *cfg.temperature < 0)) {
    throw Error(Errc::InvalidConfig, "temperature must be finite and >= 0");
  }
  if (cfg.timeout.count() <= 0) throw Error(Errc::InvalidConfig, "timeout must be positive");
  if (cfg.max_tokens <= 0) throw Error(Errc::InvalidConfig, "max_tokens must be positive");
  if (cfg.max_retries < 0) throw Error(Errc::InvalidConfig, "max_retries must be >= 0");
  if (cfg.max_concurrency < 1) throw Error(Errc::InvalidConfig, "max_concurrency must be >= 1");
}

CompletionResult chat_complete(const PromptBundle& bundle, ChatProvider& provider, const CompletionOptions& options) {
  if (bundle.messages.empty() || bundle.messages.front().role != Role::system) {
    throw Error(Errc::BadRequest, "bundle must start with a system message");
  }
  return provider.complete(bundle, options);
}

std::vector<Eigen::VectorXd> embed(std::span<const std::string> texts, EmbeddingProvider& provider) {
  if (texts.empty()) throw Error(Errc::EmptyInput, "nothing to embed");
  auto out = provider.embed(texts);
  if (out.size() != texts.size()) {
    throw Error(Errc::MalformedProviderResponse, "expected " + std::to_string(texts.size()) + " embeddings, got " +
                                                     std::to_string(out.size()));
  }
  for (const auto& v : out) {
    if (v.size() != out.front().size() || v.size() == 0) {
      throw Error(Errc::MalformedProviderResponse, "embeddings differ in dimension");
    }
  }
  return out;
}

std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (std::size_t pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos + 3)) {
    text.replace(pos, secret.size(), "***");
  }
  return text;
}

HttpProvider::HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  const auto scheme_end = cfg_.base_url.find("://");
  if (scheme_end == std::string::npos) throw Error(Errc::InvalidConfig, "base_url needs a scheme: " + cfg_.base_url);
  const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
  origin_ = cfg_.base_url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  slots_ = std::make_unique<std::counting_semaphore<>>(cfg_.max_concurrency);
}

json HttpProvider::chat_request_body(const PromptBundle& bundle, const CompletionOptions& options) const {
  json body = {{"model", cfg_.model_name}, {"messages", to_wire_json(bundle)}, {"max_tokens", cfg_.max_tokens}};
  if (auto t = options.temperature ? options.temperature : cfg_.temperature) body["temperature"] = *t;
  if (options.seed) body["seed"] = *options.seed;
  return body;
}

json HttpProvider::embedding_request_body(std::span<const std::string> texts) const {
  return {{"model", cfg_.embedding_model}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
}

json HttpProvider::post(const std::string& path, const json& body) {
  std::string key;
  if (!cfg_.api_key_env.empty()) {
    auto v = env(cfg_.api_key_env.c_str());
    if (!v) throw Error(Errc::AuthError, "environment variable " + cfg_.api_key_env + " is not set");
    key = *v;
  }

  SlotGuard slot(*slots_);
  const std::string payload = body.dump();
  const std::string url_path = path_prefix_ + path;
  httplib::Headers headers;
  if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

  Error last(Errc::TransportError, "no attempt made");
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      auto delay = cfg_.retry_base_delay * (1 << std::min(attempt - 1, 10));
      std::this_thread::sleep_for(delay);
    }
    if (cfg_.log_requests) {
      std::clog << "[wordalise] POST " << origin_ << url_path << " (attempt " << attempt + 1 << ") "
                << redact(payload, key) << "\n";
    }

    httplib::Client client(origin_);
    const auto secs = cfg_.timeout.count() / 1000;
    const auto usecs = (cfg_.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    auto res = client.Post(url_path, headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      last = Error(err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ? Errc::Timeout
                                                                                            : Errc::TransportError,
                   "POST " + url_path + ": " + httplib::to_string(err));
      continue;
    }
    if (cfg_.log_requests) std::clog << "[wordalise] <- " << res->status << " " << redact(res->body, key) << "\n";

    if (res->status == 401 || res->status == 403) {
      throw Error(Errc::AuthError, "HTTP " + std::to_string(res->status) + ": " + redact(res->body, key));
    }
    if (res->status == 429) {
      std::string retry_after = res->get_header_value("Retry-After");
      last = Error(Errc::RateLimited, "retry_after=" + (retry_after.empty() ? std::string("unknown") : retry_after));
      if (!retry_after.empty() && attempt < cfg_.max_retries) {
        const double s = std::atof(retry_after.c_str());
        if (s > 0) std::this_thread::sleep_for(std::chrono::milliseconds(long(std::min(s, 30.0) * 1000)));
      }
      continue;
    }
    if (res->status >= 500) {
      last = Error(Errc::TransportError, "HTTP " + std::to_string(res->status));
      continue;
    }
    if (res->status != 200) {
      throw Error(Errc::MalformedProviderResponse, "HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw Error(Errc::MalformedProviderResponse, std::string("response is not JSON: ") + e.what());
    }
  }
  if (!is_transient(last.code())) throw last;
  throw Error(last.code(), last.detail() + " (after " + std::to_string(cfg_.max_retries + 1) + " attempts)");
}

CompletionResult HttpProvider::complete(const PromptBundle& bundle, const CompletionOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const json j = post("/chat/completions", chat_request_body(bundle, options));
  CompletionResult r;
  try {
    const auto& choice = j.at("choices").at(0);
    r.finish_reason = choice.value("finish_reason", "stop");
    const auto& content = choice.at("message").at("content");
    if (content.is_string()) r.text = content.get<std::string>();
    if (j.contains("usage")) {
      const auto& u = j["usage"];
      r.usage = {u.value("prompt_tokens", 0), u.value("completion_tokens", 0), u.value("total_tokens", 0)};
    }
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedProviderResponse, std::string("chat completion: ") + e.what());
  }
  if (r.ok() && r.text.empty()) throw Error(Errc::MalformedProviderResponse, "successful completion without text");
  if (!r.ok()) r.text.clear();
  r.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  return r;
}

std::vector<Eigen::VectorXd> HttpProvider::embed(std::span<const std::string> texts) {
  const json j = post("/embeddings", embedding_request_body(texts));
  std::vector<Eigen::VectorXd> out(texts.size());
  try {
    for (const auto& item : j.at("data")) {
      const auto index = item.value("index", std::size_t(0));
      if (index >= out.size()) throw Error(Errc::MalformedProviderResponse, "embedding index out of range");
      const auto v = item.at("embedding").get<std::vector<double>>();
      out[index] = Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedProviderResponse, std::string("embeddings: ") + e.what());
  }
  return out;
}

}  // namespace wordalise
