#include "wordalise/catalog.hpp"

#include <algorithm>
#include <set>

#include "wordalise/error.hpp"

namespace wordalise {

namespace fs = std::filesystem;

const Entity& Application::entity(std::string_view entity_id) const {
  for (const auto& e : entities) {
    if (e.entity_id == entity_id) return e;
  }
  throw Error(Errc::UnknownEntity, "'" + std::string(entity_id) + "' in app '" + config.app_id + "'");
}

const stats::MetricStats<double>& Application::stats_for(std::string_view metric) const {
  for (const auto& s : metric_stats) {
    if (s.metric == metric) return s;
  }
  throw Error(Errc::MissingMetric, std::string(metric));
}

Eigen::VectorXd Application::column(const std::string& metric) const {
  Eigen::VectorXd v(Eigen::Index(entities.size()));
  for (std::size_t i = 0; i < entities.size(); ++i) v(Eigen::Index(i)) = entities[i].values.at(metric);
  return v;
}

ZScoreVector Application::z_vector(const Entity& e) const {
  ZScoreVector zv;
  zv.entity_id = e.entity_id;
  for (const auto& m : config.metric_specs) {
    auto it = e.values.find(m.name);
    if (it == e.values.end()) throw Error(Errc::MissingMetric, "'" + e.entity_id + "' lacks '" + m.name + "'");
    zv.raw[m.name] = it->second;
    zv.scores[m.name] = stats::z_score(it->second, stats_for(m.name));
  }
  return zv;
}

SyntheticText Application::synthetic(const Entity& e) const { return synthesize(e, z_vector(e), config, model()); }

std::map<std::string, std::string> Application::true_classes(const Entity& e) const {
  return classify_factors(z_vector(e), model());
}

Application make_application(ApplicationConfig config, std::vector<Entity> entities, QACorpus qa,
                             std::vector<FewShotExample> few_shot) {
  Application app{std::move(config), std::move(entities), std::move(qa), std::move(few_shot), {}};
  for (const auto& m : app.config.metric_specs) {
    app.metric_stats.push_back(stats::compute_metric_stats(app.column(m.name), m.name));
  }
  return app;
}

Application load_application(const fs::path& config_path) {
  ApplicationConfig config = load_config(config_path);
  for (const auto* p : {&config.dataset_path, &config.qa_corpus_path, &config.few_shot_path, &config.model_card_path}) {
    if (!fs::is_regular_file(*p)) throw Error(Errc::UnresolvedPath, p->string());
  }
  if (const auto report = validate_config(config, config.normative_model); !report.ok()) {
    std::string msg = config_path.string() + ":";
    for (const auto& f : report.findings) msg += " [" + f.kind + "] " + f.message + ";";
    throw Error(Errc::InvalidConfig, msg);
  }
  auto entities = load_dataset(config.dataset_path, config);
  auto qa = load_qa_corpus(config.qa_corpus_path);
  auto few_shot = load_few_shot(config.few_shot_path);
  return make_application(std::move(config), std::move(entities), std::move(qa), std::move(few_shot));
}

Profile profile(const Application& app, const Entity& entity) {
  Profile p{app.config.app_id, entity.entity_id, entity.label, {}};
  const ZScoreVector zv = app.z_vector(entity);
  for (const auto& m : app.config.metric_specs) {
    const auto& st = app.stats_for(m.name);
    const Eigen::VectorXd col = app.column(m.name);
    const Eigen::ArrayXd cohort_z = stats::z_scores(col, st);
    const auto pr = stats::percentile_and_rank(zv.raw.at(m.name), col);
    MetricProfile mp;
    mp.metric = m.name;
    mp.display_phrase = m.display_phrase;
    mp.raw = zv.raw.at(m.name);
    mp.z = zv.scores.at(m.name);
    mp.class_label = app.model().band_of(mp.z).class_label;
    mp.percentile = pr.percentile;
    mp.rank = long(pr.rank);
    mp.cohort_z.assign(cohort_z.data(), cohort_z.data() + cohort_z.size());
    p.metrics.push_back(std::move(mp));
  }
  return p;
}

nlohmann::json to_json(const Profile& p) {
  nlohmann::json j;
  j["app_id"] = p.app_id;
  j["entity_id"] = p.entity_id;
  j["label"] = p.label;
  j["metrics"] = nlohmann::json::array();
  for (const auto& m : p.metrics) {
    j["metrics"].push_back({{"metric", m.metric},
                            {"display_phrase", m.display_phrase},
                            {"raw", m.raw},
                            {"z", m.z},
                            {"class_label", m.class_label},
                            {"percentile", m.percentile},
                            {"rank", m.rank},
                            {"chart", {{"metric", m.metric},
                                       {"cohort_z", m.cohort_z},
                                       {"entity_z", m.z},
                                       {"class_label", m.class_label}}}});
  }
  return j;
}

Catalog::Catalog(std::vector<std::shared_ptr<const Application>> apps) : apps_(std::move(apps)) {
  std::set<std::string> ids;
  for (const auto& a : apps_) {
    if (!ids.insert(a->config.app_id).second) throw Error(Errc::DuplicateApp, a->config.app_id);
  }
}

Catalog Catalog::load_directory(const fs::path& dir) {
  std::vector<fs::path> configs;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_directory() && fs::is_regular_file(entry.path() / "config.json")) {
        configs.push_back(entry.path() / "config.json");
      }
    }
  }
  std::sort(configs.begin(), configs.end());
  std::vector<std::shared_ptr<const Application>> apps;
  for (const auto& c : configs) apps.push_back(std::make_shared<const Application>(load_application(c)));
  return Catalog(std::move(apps));
}

std::shared_ptr<const Application> Catalog::find(std::string_view app_id) const {
  for (const auto& a : apps_) {
    if (a->config.app_id == app_id) return a;
  }
  return nullptr;
}

const Application& Catalog::at(std::string_view app_id) const {
  auto a = find(app_id);
  if (!a) throw Error(Errc::UnknownApp, std::string(app_id));
  return *a;
}

}  // namespace wordalise
