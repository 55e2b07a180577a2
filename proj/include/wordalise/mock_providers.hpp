#pragma once

// Deterministic in-process providers. None of them touch the network.

#include <atomic>
#include <memory>
#include <string>

#include "wordalise/error.hpp"
#include "wordalise/evalharness.hpp"
#include "wordalise/llmgateway.hpp"

namespace wordalise::mock {

/// Class per factor chosen by the longest normative phrase found in the text;
/// the first class when nothing matches.
std::map<std::string, std::string> faithful_reading(const ReconstructionRequest& request);

/// Generation: echoes the fenced data block of the last user turn.
/// Reconstruction: faithful_reading() as JSON.
/// Chat: "Echo: <question>" plus every knowledge-tagged answer as context.
class EchoProvider : public ChatProvider {
 public:
  CompletionResult complete(const PromptBundle& bundle, const CompletionOptions& options) override;
  std::string name() const override { return "mock:echo"; }
};

/// Same text for every generation request, whatever the data.
class IgnoreDataProvider : public ChatProvider {
 public:
  static constexpr std::string_view kCanned =
      "A balanced profile with nothing that stands out from the comparison group.";
  CompletionResult complete(const PromptBundle& bundle, const CompletionOptions& options) override;
  std::string name() const override { return "mock:ignore-data"; }
};

/// Echo generation; reconstruction picks every class uniformly at random.
class RandomClassProvider : public ChatProvider {
 public:
  explicit RandomClassProvider(std::uint64_t seed = 0) : seed_(seed) {}
  CompletionResult complete(const PromptBundle& bundle, const CompletionOptions& options) override;
  std::string name() const override { return "mock:random"; }

 private:
  std::uint64_t seed_;
  std::atomic<std::uint64_t> calls_{0};
};

/// Wraps another provider and corrupts a fraction of reconstruction replies.
class FaultyProvider : public ChatProvider {
 public:
  FaultyProvider(std::shared_ptr<ChatProvider> inner, double fault_rate, std::uint64_t seed = 0)
      : inner_(std::move(inner)), fault_rate_(fault_rate), seed_(seed) {}
  CompletionResult complete(const PromptBundle& bundle, const CompletionOptions& options) override;
  std::string name() const override { return "mock:faulty(" + inner_->name() + ")"; }

  long faults() const { return faults_.load(); }

 private:
  std::shared_ptr<ChatProvider> inner_;
  double fault_rate_;
  std::uint64_t seed_;
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<long> faults_{0};
};

/// Always throws `code`; counts calls.
class FailingProvider : public ChatProvider {
 public:
  explicit FailingProvider(Errc code) : code_(code) {}
  CompletionResult complete(const PromptBundle& bundle, const CompletionOptions& options) override;
  std::string name() const override { return "mock:failing"; }

  long calls() const { return calls_.load(); }

 private:
  Errc code_;
  std::atomic<long> calls_{0};
};

/// Signed feature hashing over character trigrams, words and word pairs. Equal
/// texts map to equal vectors and words sharing stems ("passing", "passes") land
/// close together.
class HashingEmbedder : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(int dimension = 256, std::uint64_t seed = 0) : dim_(dimension), seed_(seed) {}
  std::vector<Eigen::VectorXd> embed(std::span<const std::string> texts) override;
  std::string name() const override { return "mock:hashing-" + std::to_string(dim_); }

 private:
  int dim_;
  std::uint64_t seed_;
};

/// "echo", "ignore-data", "random"; throws InvalidConfig otherwise.
std::shared_ptr<ChatProvider> make_chat_mock(std::string_view kind, std::uint64_t seed = 0);

}  // namespace wordalise::mock
