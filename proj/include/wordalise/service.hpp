#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "wordalise/catalog.hpp"
#include "wordalise/chatengine.hpp"
#include "wordalise/error.hpp"
#include "wordalise/llmgateway.hpp"

namespace httplib {
class Server;
}

namespace wordalise {

/// HTTP status for an error code: 404 unknown app/entity/session, 422 degenerate
/// metric, 502 provider failures, 400 bad requests, 500 otherwise.
int http_status(Errc code);

/// {"code": "...", "message": "..."}
nlohmann::json error_body(const Error& e);

struct ServiceDeps {
  std::shared_ptr<const Catalog> catalog;
  std::shared_ptr<ChatProvider> generator;
  std::shared_ptr<EmbeddingProvider> embedder;
  std::optional<std::filesystem::path> transcript_dir;
  ChatSettings chat;
};

/// JSON API consumed by the web front end. Routes, all under /api:
///   GET  /health
///   GET  /applications
///   GET  /applications/{app}/entities
///   GET  /applications/{app}/entities/{id}/profile
///   POST /applications/{app}/entities/{id}/wordalisation   {"control": bool}
///   GET  /applications/{app}/model-card
///   POST /chat                                            {"app": ..., "entity": ...}
///   POST /chat/{session}                                  {"text": ...}
///   GET  /chat/{session}/transcript
class Service {
 public:
  explicit Service(ServiceDeps deps);

  /// Installs routes, CORS headers and error handling on `server`.
  void mount(httplib::Server& server);

  /// Blocks serving on host:port.
  bool listen(const std::string& host, int port);

  nlohmann::json wordalise(const std::string& app_id, const std::string& entity_id, bool control) const;

 private:
  ServiceDeps deps_;
  std::shared_ptr<SessionStore> sessions_;
};

}  // namespace wordalise
