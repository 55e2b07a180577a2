#include "wordalise/chatengine.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <numeric>

namespace wordalise {

using nlohmann::json;

void EmbeddingIndex::add(IndexItem item, const Eigen::VectorXd& v) {
  if (!items_.empty() && v.size() != rows_.cols()) {
    throw Error(Errc::DimensionMismatch, "index has dimension " + std::to_string(rows_.cols()) + ", got " +
                                             std::to_string(v.size()));
  }
  if (v.size() == 0) throw Error(Errc::DimensionMismatch, "empty embedding");
  const double n = v.norm();
  if (n == 0.0) throw Error(Errc::ZeroVector, "zero embedding for '" + item.question + "'");
  const Eigen::Index r = rows_.rows();
  rows_.conservativeResize(r + 1, v.size());
  rows_.row(r) = v.transpose();
  inv_norms_.conservativeResize(r + 1);
  inv_norms_(r) = 1.0 / n;
  items_.push_back(std::move(item));
}

std::vector<Hit> EmbeddingIndex::top_k(const Eigen::VectorXd& query, std::size_t k) const {
  if (items_.empty()) throw Error(Errc::EmptyIndex, "nothing indexed");
  if (query.size() != rows_.cols()) {
    throw Error(Errc::DimensionMismatch, "query has dimension " + std::to_string(query.size()) + ", index " +
                                             std::to_string(rows_.cols()));
  }
  const double qn = query.norm();
  if (qn == 0.0) throw Error(Errc::ZeroVector, "zero query vector");
  const Eigen::VectorXd scores = (rows_ * query).cwiseProduct(inv_norms_) / qn;

  std::vector<std::size_t> order(items_.size());
  std::iota(order.begin(), order.end(), 0);
  k = std::min(k, order.size());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(Eigen::Index(a)) > scores(Eigen::Index(b));
  });
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < k; ++i) hits.push_back({order[i], scores(Eigen::Index(order[i]))});
  return hits;
}

EmbeddingIndex EmbeddingIndex::build(std::vector<IndexItem> items, EmbeddingProvider& embedder) {
  EmbeddingIndex index;
  if (items.empty()) return index;
  std::vector<std::string> texts;
  for (const auto& it : items) texts.push_back(it.question);
  const auto vectors = embed(texts, embedder);
  for (std::size_t i = 0; i < items.size(); ++i) index.add(std::move(items[i]), vectors[i]);
  return index;
}

std::vector<std::size_t> rank_by_similarity(const Eigen::VectorXd& query, std::span<const Eigen::VectorXd> candidates) {
  std::vector<double> s;
  s.reserve(candidates.size());
  for (const auto& c : candidates) s.push_back(cosine_similarity(query, c));
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  return order;
}

std::vector<Hit> get_relevant_info(const EmbeddingIndex& index, EmbeddingProvider& embedder, const std::string& query,
                                   std::size_t k) {
  if (index.size() == 0 || k == 0) return {};
  const std::string texts[] = {query};
  return index.top_k(embed(texts, embedder).front(), k);
}

std::vector<IndexItem> knowledge_items(const Application& app, const Entity* entity) {
  std::vector<IndexItem> items;
  for (const auto& p : app.qa.pairs) items.push_back({p.user, p.assistant, IndexItem::Source::qa});
  if (entity) {
    const SyntheticText syn = app.synthetic(*entity);
    for (const auto& s : syn.sentences) {
      const MetricSpec* m = app.config.find_metric(s.metric);
      const std::string q = "How is " + entity->label + " in " + (m ? m->display_phrase : s.metric) + "?";
      items.push_back({q, s.text, IndexItem::Source::data});
    }
  }
  return items;
}

std::shared_ptr<ChatSession> make_session(std::string id, std::shared_ptr<const Application> app,
                                          std::optional<std::string> entity_id, EmbeddingProvider& embedder,
                                          std::vector<Message> opening, const ChatSettings& settings) {
  if (!app) throw Error(Errc::UnknownApp, "no application for session");
  const Entity* entity = entity_id ? &app->entity(*entity_id) : nullptr;
  auto s = std::make_shared<ChatSession>();
  s->id = std::move(id);
  s->index = EmbeddingIndex::build(knowledge_items(*app, entity), embedder);
  s->app = std::move(app);
  s->entity_id = std::move(entity_id);
  const std::string at = iso8601(settings.now());
  for (auto& m : opening) {
    if (m.role == Role::system) throw Error(Errc::BadRequest, "opening turns must be user or assistant");
    m.tag = Tag::history;
    s->transcript.push_back({std::string(to_string(m.role)), m.content, at});
    s->history.push_back(std::move(m));
  }
  return s;
}

PromptBundle chat_bundle(const ChatSession& session, const std::string& text, const std::vector<Hit>& hits,
                         const ChatSettings& settings) {
  PromptBundle b;
  b.messages.push_back({Role::system, session.app->config.system_prompt, Tag::system});
  for (const auto& h : hits) {
    const IndexItem& it = session.index.item(h.index);
    b.messages.push_back({Role::user, it.question, Tag::knowledge});
    b.messages.push_back({Role::assistant, it.answer, Tag::knowledge});
  }
  const std::size_t n = session.history.size();
  const std::size_t from = n > settings.max_history ? n - settings.max_history : 0;
  for (std::size_t i = from; i < n; ++i) {
    Message m = session.history[i];
    m.tag = Tag::history;
    b.messages.push_back(std::move(m));
  }
  b.messages.push_back({Role::user, text, Tag::query});
  return b;
}

std::string handle_input(ChatSession& session, const std::string& text, ChatProvider& provider,
                         EmbeddingProvider& embedder, const ChatSettings& settings) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw Error(Errc::BadRequest, "empty message");
  std::lock_guard lock(session.mu);
  const std::string asked_at = iso8601(settings.now());
  const auto hits = get_relevant_info(session.index, embedder, text, settings.k);
  const auto result = chat_complete(chat_bundle(session, text, hits, settings), provider);
  if (!result.ok()) {
    throw Error(Errc::MalformedProviderResponse, "chat completion ended with '" + result.finish_reason + "'");
  }
  // Nothing below can fail halfway; the session is only touched on success.
  session.history.push_back({Role::user, text, Tag::history});
  session.history.push_back({Role::assistant, result.text, Tag::history});
  session.transcript.push_back({"user", text, asked_at});
  session.transcript.push_back({"assistant", result.text, iso8601(settings.now())});
  return result.text;
}

std::string export_transcript(const ChatSession& session) {
  std::lock_guard lock(session.mu);
  std::string out;
  for (const auto& e : session.transcript) {
    out += json{{"role", e.role}, {"content", e.content}, {"timestamp", e.timestamp}}.dump();
    out += "\n";
  }
  return out;
}

std::string iso8601(std::chrono::system_clock::time_point t) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  std::time_t secs = std::time_t(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  const std::size_t n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + n, sizeof buf - n, ".%03dZ", int(ms % 1000));
  return buf;
}

std::shared_ptr<ChatSession> SessionStore::create(std::shared_ptr<const Application> app,
                                                  std::optional<std::string> entity_id, EmbeddingProvider& embedder,
                                                  std::vector<Message> opening, const ChatSettings& settings) {
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = "s" + std::to_string(next_++);
  }
  // Embedding happens outside the registry lock.
  auto s = make_session(id, std::move(app), std::move(entity_id), embedder, std::move(opening), settings);
  std::lock_guard lock(mu_);
  sessions_[s->id] = s;
  return s;
}

std::shared_ptr<ChatSession> SessionStore::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::UnknownSession, "'" + id + "'");
  return it->second;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

void SessionStore::persist(const ChatSession& session) const {
  if (!transcript_dir_) return;
  std::filesystem::create_directories(*transcript_dir_);
  std::ofstream(*transcript_dir_ / (session.id + ".jsonl"), std::ios::trunc) << export_transcript(session);
}

}  // namespace wordalise
