#include "wordalise/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "wordalise/csv.hpp"
#include "wordalise/error.hpp"

namespace wordalise {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Polarity polarity_from(const std::string& s) {
  if (s == "higher_is_better") return Polarity::higher_is_better;
  if (s == "lower_is_better") return Polarity::lower_is_better;
  if (s == "bipolar") return Polarity::bipolar;
  throw Error(Errc::InvalidConfig, "unknown polarity '" + s + "'");
}

Aggregation aggregation_from(const std::string& s) {
  if (s == "column") return Aggregation::column;
  if (s == "signed_sum") return Aggregation::signed_sum;
  if (s == "loading_sum") return Aggregation::loading_sum;
  throw Error(Errc::InvalidConfig, "unknown aggregation '" + s + "'");
}

fs::path resolve(const fs::path& base, const json& j, const char* key, bool required = true) {
  if (!j.contains(key)) {
    if (required) throw Error(Errc::InvalidConfig, std::string("missing '") + key + "'");
    return {};
  }
  fs::path p = j.at(key).get<std::string>();
  return p.is_absolute() ? p : base / p;
}

std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Template placeholders each template may use.
const std::set<std::string> kSentencePlaceholders = {"subject", "was", "phrase", "metric", "label", "adverb"};
const std::set<std::string> kEvidencePlaceholders = {"evidence", "question", "answer", "label", "metric"};

void check_placeholders(const std::string& tmpl, const std::set<std::string>& allowed, const std::string& where,
                        ValidationReport& report) {
  static const std::regex re(R"(\{([A-Za-z_]+)\})");
  for (auto it = std::sregex_iterator(tmpl.begin(), tmpl.end(), re); it != std::sregex_iterator(); ++it) {
    const std::string name = (*it)[1];
    if (!allowed.contains(name)) {
      report.findings.push_back({"unknown placeholder", where + " uses unknown placeholder {" + name + "}"});
    }
  }
}

}  // namespace

const MetricSpec* ApplicationConfig::find_metric(std::string_view name) const {
  for (const auto& m : metric_specs) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::higher_is_better: return "higher_is_better";
    case Polarity::lower_is_better: return "lower_is_better";
    case Polarity::bipolar: return "bipolar";
  }
  return "";
}

std::string_view to_string(Aggregation a) {
  switch (a) {
    case Aggregation::column: return "column";
    case Aggregation::signed_sum: return "signed_sum";
    case Aggregation::loading_sum: return "loading_sum";
  }
  return "";
}

bool ValidationReport::has(std::string_view kind) const {
  return std::any_of(findings.begin(), findings.end(), [&](const Finding& f) { return f.kind == kind; });
}

ApplicationConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");
  ApplicationConfig c;
  try {
    c.app_id = j.at("app_id").get<std::string>();
    c.display_name = j.value("display_name", c.app_id);
    c.system_prompt = j.at("system_prompt").get<std::string>();
    c.answer_instructions = j.at("answer_instructions").get<std::string>();
    c.data_preamble = j.value("data_preamble", "");
    c.default_subject = j.value("default_subject", "They");
    c.instructions_before_knowledge = j.value("instructions_before_knowledge", false);
    if (j.contains("answer_scale")) {
      c.answer_scale = stats::AnswerScale{j.at("answer_scale").at("min").get<int>(),
                                          j.at("answer_scale").at("max").get<int>()};
    }
    if (j.contains("provider")) c.provider = j.at("provider");

    c.dataset_path = resolve(base_dir, j, "dataset_path");
    c.qa_corpus_path = resolve(base_dir, j, "qa_corpus_path");
    c.few_shot_path = resolve(base_dir, j, "few_shot_path");
    c.model_card_path = resolve(base_dir, j, "model_card_path");

    for (const auto& mj : j.at("metrics")) {
      MetricSpec m;
      m.name = mj.at("name").get<std::string>();
      m.display_phrase = mj.value("display_phrase", m.name);
      m.polarity = polarity_from(mj.value("polarity", "higher_is_better"));
      m.aggregation = aggregation_from(mj.value("aggregation", "column"));
      if (mj.contains("questions")) {
        for (const auto& qj : mj.at("questions")) {
          Question q;
          q.id = qj.at("id").get<std::string>();
          q.text = qj.value("text", "");
          q.weight = qj.value("weight", 1.0);
          q.evidence = qj.value("evidence", "");
          q.answer_labels = qj.value("answer_labels", std::vector<std::string>{});
          m.questions.push_back(std::move(q));
        }
      }
      c.metric_specs.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
  c.normative_model = normative_model_from_json(j.at("normative_model"));
  c.normative_model_ref = c.normative_model.model_id;
  return c;
}

ApplicationConfig load_config(const fs::path& path) {
  const std::string text = csv::read_file(path.string());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
  }
  auto c = config_from_json(j, path.parent_path());
  c.config_path = path;
  return c;
}

std::vector<Entity> parse_dataset(std::string_view csv_text, const ApplicationConfig& config) {
  const auto rows = csv::parse(csv_text);
  if (rows.empty()) throw Error(Errc::EmptyDataset, "no header row");

  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col.emplace(rows[0][i], i);
  auto column = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) throw Error(Errc::MissingColumn, name);
    return it->second;
  };
  const std::size_t id_col = column("entity_id");
  const std::size_t label_col = column("label");
  const std::optional<std::size_t> subject_col =
      col.contains("subject") ? std::optional(col.at("subject")) : std::nullopt;

  // Resolve every column before reading rows so a schema error names the column.
  std::vector<std::vector<std::size_t>> metric_cols;
  for (const auto& m : config.metric_specs) {
    std::vector<std::size_t> cols;
    if (m.aggregation == Aggregation::column) {
      cols.push_back(column(m.name));
    } else {
      for (const auto& q : m.questions) cols.push_back(column(q.id));
    }
    metric_cols.push_back(std::move(cols));
  }

  if (rows.size() == 1) throw Error(Errc::EmptyDataset, "header only");

  std::vector<Entity> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != rows[0].size()) {
      throw Error(Errc::MalformedRow, "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                                          " fields, header has " + std::to_string(rows[0].size()));
    }
    auto number = [&](std::size_t c) {
      auto v = parse_number(row[c]);
      if (!v) throw Error(Errc::NonNumericValue, "row " + std::to_string(r) + ", column '" + rows[0][c] + "'");
      return *v;
    };

    Entity e;
    e.entity_id = row[id_col];
    e.label = row[label_col];
    if (subject_col) e.subject = row[*subject_col];
    for (std::size_t mi = 0; mi < config.metric_specs.size(); ++mi) {
      const auto& m = config.metric_specs[mi];
      if (m.aggregation == Aggregation::column) {
        e.values[m.name] = number(metric_cols[mi][0]);
        continue;
      }
      std::vector<double> answers;
      double score = 0;
      for (std::size_t qi = 0; qi < m.questions.size(); ++qi) {
        const std::size_t c = metric_cols[mi][qi];
        const double a = number(c);
        if (config.answer_scale && m.aggregation == Aggregation::signed_sum &&
            (a != std::round(a) || a < config.answer_scale->min || a > config.answer_scale->max)) {
          throw Error(Errc::OutOfRangeAnswer, "row " + std::to_string(r) + ", column '" + rows[0][c] + "'");
        }
        answers.push_back(a);
        score += m.questions[qi].weight * a;
      }
      e.values[m.name] = score;
      e.answers[m.name] = std::move(answers);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Entity> load_dataset(const fs::path& path, const ApplicationConfig& config) {
  return parse_dataset(csv::read_file(path.string()), config);
}

std::string format_dataset(const std::vector<Entity>& entities, const ApplicationConfig& config) {
  csv::Row header = {"entity_id", "label", "subject"};
  for (const auto& m : config.metric_specs) {
    if (m.aggregation == Aggregation::column) {
      header.push_back(m.name);
    } else {
      for (const auto& q : m.questions) header.push_back(q.id);
    }
  }
  std::string out = csv::format_row(header) + "\n";
  for (const auto& e : entities) {
    csv::Row row = {e.entity_id, e.label, e.subject};
    for (const auto& m : config.metric_specs) {
      if (m.aggregation == Aggregation::column) {
        row.push_back(format_number(e.values.at(m.name)));
      } else {
        for (double a : e.answers.at(m.name)) row.push_back(format_number(a));
      }
    }
    out += csv::format_row(row) + "\n";
  }
  return out;
}

QACorpus parse_qa_corpus(std::string_view csv_text) {
  const auto rows = csv::parse(csv_text);
  if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "User" || rows[0][1] != "Assistant") {
    throw Error(Errc::MissingHeader, "QA corpus needs exactly the headers User,Assistant");
  }
  QACorpus qa;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 2 || row[0].empty() || row[1].empty()) {
      throw Error(Errc::MalformedRow, "QA row " + std::to_string(r));
    }
    qa.pairs.push_back({row[0], row[1]});
  }
  if (qa.pairs.empty()) throw Error(Errc::EmptyCorpus, "QA corpus has no rows");
  return qa;
}

QACorpus load_qa_corpus(const fs::path& path) { return parse_qa_corpus(csv::read_file(path.string())); }

std::vector<FewShotExample> parse_few_shot(const json& j) {
  if (!j.is_array()) throw Error(Errc::InvalidConfig, "few-shot file must be a JSON array");
  std::vector<FewShotExample> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (!e.is_object() || !e.contains("user") || !e.contains("assistant") || !e["user"].is_string() ||
        !e["assistant"].is_string() || e["user"].get<std::string>().empty() ||
        e["assistant"].get<std::string>().empty()) {
      throw Error(Errc::MalformedRow, "few-shot entry " + std::to_string(i) + " needs non-empty user and assistant");
    }
    out.push_back({e["user"].get<std::string>(), e["assistant"].get<std::string>(), e.value("subject", "")});
  }
  return out;
}

std::vector<FewShotExample> load_few_shot(const fs::path& path) {
  try {
    return parse_few_shot(json::parse(csv::read_file(path.string())));
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
  }
}

ValidationReport validate_config(const ApplicationConfig& config, const NormativeModel& model) {
  ValidationReport report;
  auto add = [&](std::string kind, std::string msg) { report.findings.push_back({std::move(kind), std::move(msg)}); };

  if (config.app_id.empty()) add("missing field", "app_id is empty");
  if (config.system_prompt.empty()) add("missing field", "system_prompt is empty");

  for (const auto& [name, path] : {std::pair{"dataset_path", &config.dataset_path},
                                   std::pair{"qa_corpus_path", &config.qa_corpus_path},
                                   std::pair{"few_shot_path", &config.few_shot_path},
                                   std::pair{"model_card_path", &config.model_card_path}}) {
    std::error_code ec;
    if (path->empty() || !fs::is_regular_file(*path, ec)) {
      add("unresolved path", std::string(name) + " '" + path->string() + "' does not exist");
    }
  }

  if (config.metric_specs.empty()) add("no metrics", "metric_specs is empty");
  std::set<std::string> seen;
  for (const auto& m : config.metric_specs) {
    if (!seen.insert(m.name).second) add("duplicate metric", "metric '" + m.name + "' is declared twice");
    if (m.aggregation != Aggregation::column && m.questions.empty()) {
      add("missing questions", "metric '" + m.name + "' aggregates questions but declares none");
    }
    for (std::size_t i = 0; i < m.questions.size(); ++i) {
      const auto& q = m.questions[i];
      const std::string where = "metric '" + m.name + "' question " + std::to_string(i + 1);
      if (q.text.empty()) add("weight schema", where + " has empty text");
      if (m.aggregation == Aggregation::signed_sum && q.weight != 1.0 && q.weight != -1.0) {
        add("weight violation", where + " has weight " + format_number(q.weight) + " (must be +1 or -1)");
      }
      if (m.aggregation == Aggregation::loading_sum && config.answer_scale &&
          q.answer_labels.size() != std::size_t(config.answer_scale->size())) {
        add("answer labels", where + " needs " + std::to_string(config.answer_scale->size()) + " answer labels");
      }
    }
  }

  for (const auto& issue : check_partition(model.bands)) {
    add(issue.kind == PartitionIssue::Kind::gap ? "uncovered z-range"
        : issue.kind == PartitionIssue::Kind::overlap ? "overlapping z-range"
                                                      : "band order",
        "bands: " + issue.message);
  }
  if (!model.intensity_bands.empty()) {
    for (const auto& issue : check_partition(model.intensity_bands)) {
      add(issue.kind == PartitionIssue::Kind::gap ? "uncovered z-range"
          : issue.kind == PartitionIssue::Kind::overlap ? "overlapping z-range"
                                                        : "band order",
          "intensity_bands: " + issue.message);
    }
  }

  for (const auto* table : {&model.metric_phrases, &model.metric_followups}) {
    const char* name = table == &model.metric_phrases ? "metric_phrases" : "metric_followups";
    for (const auto& [metric, phrases] : *table) {
      if (!config.find_metric(metric)) add("unknown metric", std::string(name) + " names unknown metric '" + metric + "'");
      if (phrases.size() != model.bands.size()) {
        add("phrase table", std::string(name) + "['" + metric + "'] has " + std::to_string(phrases.size()) +
                                " entries for " + std::to_string(model.bands.size()) + " bands");
      }
    }
  }

  if (model.sentence_template.empty()) add("missing field", "sentence_template is empty");
  check_placeholders(model.sentence_template, kSentencePlaceholders, "sentence_template", report);
  if (model.sentence_template.find("{adverb}") != std::string::npos && model.intensity_bands.empty()) {
    add("missing field", "sentence_template uses {adverb} but intensity_bands is empty");
  }
  if (model.evidence_threshold) {
    if (model.evidence_template.empty()) add("missing field", "evidence_threshold set without evidence_template");
    check_placeholders(model.evidence_template, kEvidencePlaceholders, "evidence_template", report);
  }
  if (model.sentence_template.find("{label}") == std::string::npos &&
      model.sentence_template.find("{subject}") == std::string::npos &&
      config.data_preamble.find("{label}") == std::string::npos) {
    add("missing field", "neither the sentence template nor data_preamble names the entity");
  }
  return report;
}

}  // namespace wordalise
