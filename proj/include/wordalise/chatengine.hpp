#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wordalise/catalog.hpp"
#include "wordalise/error.hpp"
#include "wordalise/llmgateway.hpp"

namespace wordalise {

/// Cosine of the angle between a and b. Throws DimensionMismatch or ZeroVector.
template <class DerivedA, class DerivedB>
double cosine_similarity(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::DimensionMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw Error(Errc::ZeroVector, "cosine similarity of a zero vector");
  return a.dot(b) / (na * nb);
}

struct IndexItem {
  enum class Source { qa, data };
  std::string question;  // the text that was embedded
  std::string answer;
  Source source = Source::qa;
};

struct Hit {
  std::size_t index = 0;
  double score = 0;
};

/// Dense in-memory vector index, one row per item.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;

  /// Throws DimensionMismatch if the vector does not match earlier rows, ZeroVector for a zero vector.
  void add(IndexItem item, const Eigen::VectorXd& vector);

  std::size_t size() const { return items_.size(); }
  Eigen::Index dim() const { return rows_.cols(); }
  const IndexItem& item(std::size_t i) const { return items_.at(i); }
  const Eigen::MatrixXd& vectors() const { return rows_; }

  /// k most similar items, best first; equal scores keep insertion order.
  /// Throws EmptyIndex, DimensionMismatch, ZeroVector.
  std::vector<Hit> top_k(const Eigen::VectorXd& query, std::size_t k) const;

  /// Embeds every item's question in one batch.
  static EmbeddingIndex build(std::vector<IndexItem> items, EmbeddingProvider& embedder);

 private:
  std::vector<IndexItem> items_;
  Eigen::MatrixXd rows_;        // raw vectors
  Eigen::VectorXd inv_norms_;   // 1 / ||row||
};

/// Candidate positions ordered by decreasing cosine similarity to `query` (stable).
std::vector<std::size_t> rank_by_similarity(const Eigen::VectorXd& query, std::span<const Eigen::VectorXd> candidates);

std::vector<Hit> get_relevant_info(const EmbeddingIndex& index, EmbeddingProvider& embedder, const std::string& query,
                                   std::size_t k);

/// QA pairs of the app plus, when an entity is given, one data item per synthetic sentence.
std::vector<IndexItem> knowledge_items(const Application& app, const Entity* entity);

struct ChatSettings {
  std::size_t k = 3;
  std::size_t max_history = 20;  // messages kept from earlier turns
  std::function<std::chrono::system_clock::time_point()> now = [] { return std::chrono::system_clock::now(); };
};

struct TranscriptEntry {
  std::string role;
  std::string content;
  std::string timestamp;  // ISO 8601, UTC
};

struct ChatSession {
  std::string id;
  std::shared_ptr<const Application> app;
  std::optional<std::string> entity_id;
  EmbeddingIndex index;
  std::vector<Message> history;  // user/assistant turns, oldest first
  std::vector<TranscriptEntry> transcript;
  mutable std::mutex mu;
};

/// `opening` seeds the history, normally the entity's data message and its wordalisation.
std::shared_ptr<ChatSession> make_session(std::string id, std::shared_ptr<const Application> app,
                                          std::optional<std::string> entity_id, EmbeddingProvider& embedder,
                                          std::vector<Message> opening = {}, const ChatSettings& settings = {});

/// The bundle sent for `text`: system, retrieved knowledge pairs, recent history, query.
PromptBundle chat_bundle(const ChatSession& session, const std::string& text, const std::vector<Hit>& hits,
                         const ChatSettings& settings);

/// One turn. Either the whole turn lands in the session or nothing does.
std::string handle_input(ChatSession& session, const std::string& text, ChatProvider& provider,
                         EmbeddingProvider& embedder, const ChatSettings& settings = {});

/// One JSON object per line: {"role", "content", "timestamp"}.
std::string export_transcript(const ChatSession& session);

std::string iso8601(std::chrono::system_clock::time_point t);

/// Thread-safe session registry. Ids are "s1", "s2", ...
class SessionStore {
 public:
  explicit SessionStore(std::optional<std::filesystem::path> transcript_dir = std::nullopt)
      : transcript_dir_(std::move(transcript_dir)) {}

  std::shared_ptr<ChatSession> create(std::shared_ptr<const Application> app, std::optional<std::string> entity_id,
                                      EmbeddingProvider& embedder, std::vector<Message> opening = {},
                                      const ChatSettings& settings = {});
  /// Throws UnknownSession.
  std::shared_ptr<ChatSession> get(const std::string& id) const;
  std::size_t size() const;

  /// Writes <dir>/<id>.jsonl when a transcript directory is configured.
  void persist(const ChatSession& session) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<ChatSession>> sessions_;
  long next_ = 1;
  std::optional<std::filesystem::path> transcript_dir_;
};

}  // namespace wordalise
