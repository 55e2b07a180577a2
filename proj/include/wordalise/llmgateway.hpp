#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "wordalise/promptforge.hpp"

namespace wordalise {

struct ProviderConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model_name = "gpt-4o-mini";
  std::string embedding_model = "text-embedding-3-small";
  std::string api_key_env = "OPENAI_API_KEY";  // empty: no Authorization header
  std::optional<double> temperature;           // unset: provider default
  int max_tokens = 1024;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds retry_base_delay{500};
  int max_concurrency = 4;
  bool log_requests = false;
};

/// Overrides fields present in `j` (keys match the member names; timeouts in ms).
ProviderConfig provider_config_from_json(const nlohmann::json& j, ProviderConfig base = {});
/// Applies WORDALISE_BASE_URL, WORDALISE_MODEL, WORDALISE_EMBEDDING_MODEL, WORDALISE_API_KEY_ENV.
ProviderConfig provider_config_from_env(ProviderConfig base = {});
/// Throws InvalidConfig for a non-finite/negative temperature or a non-positive timeout.
void validate(const ProviderConfig& cfg);

struct CompletionOptions {
  std::optional<double> temperature;  // overrides ProviderConfig::temperature
  std::optional<std::uint64_t> seed;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
  int total_tokens = 0;
};

struct CompletionResult {
  std::string text;
  std::string finish_reason;
  Usage usage;
  std::chrono::milliseconds latency{0};

  bool ok() const { return finish_reason == "stop" || finish_reason == "length"; }
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual CompletionResult complete(const PromptBundle& bundle, const CompletionOptions& options) = 0;
  virtual std::string name() const = 0;
  virtual bool offline() const { return true; }
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<Eigen::VectorXd> embed(std::span<const std::string> texts) = 0;
  virtual std::string name() const = 0;
};

/// Checks the bundle's basic shape, then delegates to the provider.
CompletionResult chat_complete(const PromptBundle& bundle, ChatProvider& provider,
                               const CompletionOptions& options = {});

/// Non-empty input; one vector per text, all of one dimension.
std::vector<Eigen::VectorXd> embed(std::span<const std::string> texts, EmbeddingProvider& provider);

/// OpenAI-compatible chat-completions and embeddings over HTTP(S).
class HttpProvider final : public ChatProvider, public EmbeddingProvider {
 public:
  explicit HttpProvider(ProviderConfig cfg);

  CompletionResult complete(const PromptBundle& bundle, const CompletionOptions& options) override;
  std::vector<Eigen::VectorXd> embed(std::span<const std::string> texts) override;
  std::string name() const override { return "live:" + cfg_.model_name; }
  bool offline() const override { return false; }

  const ProviderConfig& config() const { return cfg_; }

  /// Request bodies as sent; exposed for wire-format tests.
  nlohmann::json chat_request_body(const PromptBundle& bundle, const CompletionOptions& options) const;
  nlohmann::json embedding_request_body(std::span<const std::string> texts) const;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body);

  ProviderConfig cfg_;
  std::string origin_;       // scheme://host[:port]
  std::string path_prefix_;  // e.g. "/v1"
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

/// Replaces every occurrence of `secret` with "***".
std::string redact(std::string text, const std::string& secret);

}  // namespace wordalise
