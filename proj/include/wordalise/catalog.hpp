#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "wordalise/ingest.hpp"
#include "wordalise/lexicon.hpp"
#include "wordalise/stats.hpp"

namespace wordalise {

/// A fully loaded application: config, dataset, corpora, and per-metric cohort stats.
/// Immutable once loaded.
struct Application {
  ApplicationConfig config;
  std::vector<Entity> entities;
  QACorpus qa;
  std::vector<FewShotExample> few_shot;
  std::vector<stats::MetricStats<double>> metric_stats;  // config metric order

  const NormativeModel& model() const { return config.normative_model; }
  const Entity& entity(std::string_view entity_id) const;
  const stats::MetricStats<double>& stats_for(std::string_view metric) const;

  /// Raw values of one metric across the cohort, in dataset order.
  Eigen::VectorXd column(const std::string& metric) const;

  /// Throws DegenerateMetric if any metric has zero spread.
  ZScoreVector z_vector(const Entity& entity) const;
  SyntheticText synthetic(const Entity& entity) const;
  std::map<std::string, std::string> true_classes(const Entity& entity) const;
};

/// Builds an Application from already-parsed parts (used by tests and loaders).
Application make_application(ApplicationConfig config, std::vector<Entity> entities, QACorpus qa,
                             std::vector<FewShotExample> few_shot);

/// Loads config plus every file it references. Throws UnresolvedPath for missing files.
Application load_application(const std::filesystem::path& config_path);

struct MetricProfile {
  std::string metric;
  std::string display_phrase;
  double raw = 0;
  double z = 0;
  std::string class_label;
  double percentile = 0;
  long rank = 0;
  std::vector<double> cohort_z;
};

struct Profile {
  std::string app_id;
  std::string entity_id;
  std::string label;
  std::vector<MetricProfile> metrics;
};

Profile profile(const Application& app, const Entity& entity);
nlohmann::json to_json(const Profile& p);

/// All applications found under a directory (one sub-directory per app holding config.json).
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<std::shared_ptr<const Application>> apps);

  static Catalog load_directory(const std::filesystem::path& dir);

  const std::vector<std::shared_ptr<const Application>>& applications() const { return apps_; }
  std::shared_ptr<const Application> find(std::string_view app_id) const;
  /// Throws UnknownApp.
  const Application& at(std::string_view app_id) const;

 private:
  std::vector<std::shared_ptr<const Application>> apps_;
};

}  // namespace wordalise
