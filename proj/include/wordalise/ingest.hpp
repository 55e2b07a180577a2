#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordalise/normative_model.hpp"
#include "wordalise/stats.hpp"

namespace wordalise {

enum class Polarity { higher_is_better, lower_is_better, bipolar };

/// How a metric's raw value is obtained from a dataset row.
enum class Aggregation {
  column,       // one numeric column named after the metric
  signed_sum,   // sum of +-1 weighted integer answers (questionnaire)
  loading_sum,  // sum of real loadings times per-question mean answers (survey factors)
};

struct Question {
  std::string id;  // dataset column
  std::string text;
  double weight = 1.0;
  std::string evidence;                    // clause for "In particular they said that ..."
  std::vector<std::string> answer_labels;  // one per answer-scale value, lowest first
};

struct MetricSpec {
  std::string name;
  std::string display_phrase;
  Polarity polarity = Polarity::higher_is_better;
  Aggregation aggregation = Aggregation::column;
  std::vector<Question> questions;
};

struct ApplicationConfig {
  std::string app_id;
  std::string display_name;
  std::string system_prompt;
  std::vector<MetricSpec> metric_specs;
  std::string normative_model_ref;
  NormativeModel normative_model;
  std::string answer_instructions;
  std::string data_preamble;  // e.g. "Here is a statistical description of {label}."
  std::string default_subject = "They";
  std::optional<stats::AnswerScale> answer_scale;
  bool instructions_before_knowledge = false;
  nlohmann::json provider;  // optional live-provider overrides

  std::filesystem::path config_path;
  std::filesystem::path dataset_path;
  std::filesystem::path qa_corpus_path;
  std::filesystem::path few_shot_path;
  std::filesystem::path model_card_path;

  const MetricSpec* find_metric(std::string_view name) const;
};

struct Entity {
  std::string entity_id;
  std::string label;
  std::string subject;  // pronoun or name used by {subject}; empty means config default
  std::map<std::string, double> values;
  std::map<std::string, std::vector<double>> answers;  // per metric, in question order
};

struct QAPair {
  std::string user;
  std::string assistant;
};

struct QACorpus {
  std::vector<QAPair> pairs;
};

struct FewShotExample {
  std::string user;  // synthetic description only; the prompt wrapper is added by promptforge
  std::string assistant;
  std::string subject;  // entity named when the description is stripped
};

/// Parses an application config document; relative paths resolve against `base_dir`.
ApplicationConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ApplicationConfig load_config(const std::filesystem::path& path);

std::vector<Entity> load_dataset(const std::filesystem::path& path, const ApplicationConfig& config);
std::vector<Entity> parse_dataset(std::string_view csv_text, const ApplicationConfig& config);

/// Writes entities back in the input column layout with round-trip precision.
std::string format_dataset(const std::vector<Entity>& entities, const ApplicationConfig& config);

QACorpus load_qa_corpus(const std::filesystem::path& path);
QACorpus parse_qa_corpus(std::string_view csv_text);

std::vector<FewShotExample> load_few_shot(const std::filesystem::path& path);
std::vector<FewShotExample> parse_few_shot(const nlohmann::json& j);

struct Finding {
  std::string kind;  // "unresolved path", "uncovered z-range", "overlapping z-range", "duplicate metric", ...
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const { return findings.empty(); }
  bool has(std::string_view kind) const;
};

ValidationReport validate_config(const ApplicationConfig& config, const NormativeModel& model);

std::string_view to_string(Polarity p);
std::string_view to_string(Aggregation a);

}  // namespace wordalise
