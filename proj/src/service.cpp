#include "wordalise/service.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "wordalise/promptforge.hpp"

namespace wordalise {

using nlohmann::json;

int http_status(Errc code) {
  switch (code) {
    case Errc::UnknownApp:
    case Errc::UnknownEntity:
    case Errc::UnknownSession:
      return 404;
    case Errc::DegenerateMetric:
      return 422;
    case Errc::BadRequest:
    case Errc::EmptyInput:
      return 400;
    default:
      return is_provider_error(code) ? 502 : 500;
  }
}

json error_body(const Error& e) { return {{"code", to_string(e.code())}, {"message", e.detail()}}; }

namespace {

void send_json(httplib::Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::BadRequest, "request body must be a JSON object");
  return j;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::UnresolvedPath, p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Service::Service(ServiceDeps deps)
    : deps_(std::move(deps)), sessions_(std::make_shared<SessionStore>(deps_.transcript_dir)) {
  if (!deps_.catalog) throw Error(Errc::InvalidConfig, "service needs a catalog");
  if (!deps_.generator || !deps_.embedder) throw Error(Errc::InvalidConfig, "service needs chat and embedding providers");
}

json Service::wordalise(const std::string& app_id, const std::string& entity_id, bool control) const {
  const Application& app = deps_.catalog->at(app_id);
  const Entity& entity = app.entity(entity_id);
  json out = {{"app_id", app_id}, {"entity_id", entity_id}, {"label", entity.label}, {"control", control}};
  PromptBundle bundle;
  if (control) {
    bundle = assemble_control(app.config, app.qa, app.few_shot, entity);
    out["synthetic"] = nullptr;
  } else {
    const SyntheticText syn = app.synthetic(entity);
    bundle = assemble(app.config, app.qa, app.few_shot, entity, syn);
    out["synthetic"] = syn.joined;
  }
  const CompletionResult r = chat_complete(bundle, *deps_.generator);
  if (!r.ok()) throw Error(Errc::MalformedProviderResponse, "completion ended with '" + r.finish_reason + "'");
  out["text"] = r.text;
  out["provider"] = deps_.generator->name();
  out["prompt"] = to_inspect_json(bundle);
  return out;
}

void Service::mount(httplib::Server& srv) {
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send_json(res, error_body(e), http_status(e.code()));
    } catch (const json::exception& e) {
      send_json(res, {{"code", "BadRequest"}, {"message", e.what()}}, 400);
    } catch (const std::exception& e) {
      send_json(res, {{"code", "Internal"}, {"message", e.what()}}, 500);
    }
  });
  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) {
      send_json(res, {{"code", "NotFound"}, {"message", "no route for " + req.method + " " + req.path}}, 404);
    }
  });

  const auto catalog = deps_.catalog;
  const auto generator = deps_.generator;
  const auto embedder = deps_.embedder;
  const auto sessions = sessions_;
  const ChatSettings chat = deps_.chat;

  srv.Get("/api/health", [catalog, generator](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"status", "ok"}, {"applications", catalog->applications().size()}, {"provider", generator->name()}});
  });

  srv.Get("/api/applications", [catalog](const httplib::Request&, httplib::Response& res) {
    json arr = json::array();
    for (const auto& a : catalog->applications()) {
      json metrics = json::array();
      for (const auto& m : a->config.metric_specs) metrics.push_back({{"name", m.name}, {"display_phrase", m.display_phrase}});
      arr.push_back({{"app_id", a->config.app_id},
                     {"display_name", a->config.display_name},
                     {"entities", a->entities.size()},
                     {"class_labels", a->model().class_labels()},
                     {"metrics", metrics}});
    }
    send_json(res, arr);
  });

  srv.Get("/api/applications/:app/entities", [catalog](const httplib::Request& req, httplib::Response& res) {
    const Application& app = catalog->at(req.path_params.at("app"));
    json arr = json::array();
    for (const auto& e : app.entities) arr.push_back({{"entity_id", e.entity_id}, {"label", e.label}});
    send_json(res, arr);
  });

  srv.Get("/api/applications/:app/entities/:id/profile", [catalog](const httplib::Request& req, httplib::Response& res) {
    const Application& app = catalog->at(req.path_params.at("app"));
    send_json(res, to_json(profile(app, app.entity(req.path_params.at("id")))));
  });

  srv.Post("/api/applications/:app/entities/:id/wordalisation",
           [this](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             if (body.contains("control") && !body["control"].is_boolean()) {
               throw Error(Errc::BadRequest, "'control' must be a boolean");
             }
             send_json(res, wordalise(req.path_params.at("app"), req.path_params.at("id"), body.value("control", false)));
           });

  srv.Get("/api/applications/:app/model-card", [catalog](const httplib::Request& req, httplib::Response& res) {
    const Application& app = catalog->at(req.path_params.at("app"));
    res.set_content(read_text(app.config.model_card_path), "text/markdown; charset=utf-8");
  });

  srv.Post("/api/chat", [this, catalog, embedder, sessions, chat](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    if (!body.contains("app") || !body["app"].is_string()) throw Error(Errc::BadRequest, "'app' is required");
    std::optional<std::string> entity;
    if (body.contains("entity") && !body["entity"].is_null()) entity = body["entity"].get<std::string>();
    auto app = catalog->find(body["app"].get<std::string>());
    if (!app) throw Error(Errc::UnknownApp, "'" + body["app"].get<std::string>() + "'");
    std::vector<Message> opening;
    if (entity) {
      // The conversation starts from the entity's wordalisation.
      const json w = wordalise(app->config.app_id, *entity, false);
      opening.push_back({Role::user, wrap_data(data_preamble(app->config, w["label"].get<std::string>()) + " " +
                                               w["synthetic"].get<std::string>()),
                         Tag::history});
      opening.push_back({Role::assistant, w["text"].get<std::string>(), Tag::history});
    }
    auto s = sessions->create(app, entity, *embedder, std::move(opening), chat);
    sessions->persist(*s);
    send_json(res, {{"session_id", s->id}, {"app_id", app->config.app_id}, {"entity_id", entity ? json(*entity) : json()}},
              201);
  });

  srv.Post("/api/chat/:session", [generator, embedder, sessions, chat](const httplib::Request& req,
                                                                        httplib::Response& res) {
    auto s = sessions->get(req.path_params.at("session"));
    const json body = parse_body(req);
    if (!body.contains("text") || !body["text"].is_string()) throw Error(Errc::BadRequest, "'text' is required");
    const std::string reply = handle_input(*s, body["text"].get<std::string>(), *generator, *embedder, chat);
    sessions->persist(*s);
    send_json(res, {{"session_id", s->id}, {"reply", reply}});
  });

  srv.Get("/api/chat/:session/transcript", [sessions](const httplib::Request& req, httplib::Response& res) {
    auto s = sessions->get(req.path_params.at("session"));
    res.set_content(export_transcript(*s), "application/x-ndjson");
  });
}

bool Service::listen(const std::string& host, int port) {
  httplib::Server srv;
  mount(srv);
  return srv.listen(host, port);
}

}  // namespace wordalise
