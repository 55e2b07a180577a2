#include "wordalise/normative_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "wordalise/error.hpp"

namespace wordalise {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double bound_from_json(const nlohmann::json& j, const char* key, double unbounded) {
  if (!j.contains(key) || j.at(key).is_null()) return unbounded;
  if (!j.at(key).is_number()) throw Error(Errc::InvalidConfig, std::string("band '") + key + "' must be a number or null");
  return j.at(key).get<double>();
}

std::string open_bracket(bool inclusive) { return inclusive ? "[" : "("; }
std::string close_bracket(bool inclusive) { return inclusive ? "]" : ")"; }

}  // namespace

bool Band::contains(double z) const {
  // An unbounded end reaches the infinity itself; NaN is never contained.
  constexpr double inf = std::numeric_limits<double>::infinity();
  const bool above = lower == -inf ? z == z : (lower_inclusive ? z >= lower : z > lower);
  const bool below = upper == inf ? z == z : (upper_inclusive ? z <= upper : z < upper);
  return above && below;
}

bool Band::empty() const {
  if (lower < upper) return false;
  return !(lower == upper && lower_inclusive && upper_inclusive);
}

std::vector<std::string> NormativeModel::class_labels() const {
  std::vector<std::string> labels;
  for (const auto& b : bands) {
    if (std::find(labels.begin(), labels.end(), b.class_label) == labels.end()) labels.push_back(b.class_label);
  }
  return labels;
}

std::size_t NormativeModel::band_index(double z) const { return wordalise::band_index(z, bands); }

const Band& NormativeModel::band_of(double z) const { return bands[band_index(z)]; }

const std::string& NormativeModel::phrase_for(const std::string& metric, std::size_t index) const {
  if (auto it = metric_phrases.find(metric); it != metric_phrases.end() && index < it->second.size()) {
    return it->second[index];
  }
  return bands.at(index).phrase;
}

std::optional<std::string> NormativeModel::followup_for(const std::string& metric, std::size_t index) const {
  if (auto it = metric_followups.find(metric); it != metric_followups.end() && index < it->second.size()) {
    return it->second[index];
  }
  return std::nullopt;
}

std::size_t band_index(double z, std::span<const Band> bands) {
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (bands[i].contains(z)) return i;
  }
  std::ostringstream msg;
  msg << "no band contains z = " << z;
  throw std::logic_error(msg.str());
}

std::string format_bound(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

std::vector<PartitionIssue> check_partition(std::span<const Band> bands) {
  using Kind = PartitionIssue::Kind;
  std::vector<PartitionIssue> issues;
  auto range = [](double a, bool a_inc, double b, bool b_inc) {
    return open_bracket(a_inc) + format_bound(a) + ", " + format_bound(b) + close_bracket(b_inc);
  };

  if (bands.empty()) {
    issues.push_back({Kind::gap, -kInf, kInf, "uncovered z-range (-inf, inf): no bands"});
    return issues;
  }
  for (const auto& b : bands) {
    if (b.empty()) {
      issues.push_back({Kind::empty_band, b.lower, b.upper,
                        "empty band '" + b.class_label + "' " + range(b.lower, b.lower_inclusive, b.upper, b.upper_inclusive)});
    }
  }
  if (bands.front().lower != -kInf) {
    const auto& f = bands.front();
    issues.push_back({Kind::gap, -kInf, f.lower, "uncovered z-range " + range(-kInf, false, f.lower, !f.lower_inclusive)});
  }
  for (std::size_t i = 0; i + 1 < bands.size(); ++i) {
    const Band& a = bands[i];
    const Band& b = bands[i + 1];
    if (b.lower < a.lower) {
      issues.push_back({Kind::disorder, b.lower, a.lower,
                        "bands out of order at '" + a.class_label + "' -> '" + b.class_label + "'"});
      continue;
    }
    if (a.upper < b.lower) {
      issues.push_back({Kind::gap, a.upper, b.lower,
                        "uncovered z-range " + range(a.upper, !a.upper_inclusive, b.lower, !b.lower_inclusive)});
    } else if (a.upper > b.lower) {
      issues.push_back({Kind::overlap, b.lower, a.upper,
                        "overlapping z-range " + range(b.lower, b.lower_inclusive, a.upper, a.upper_inclusive) +
                            " between '" + a.class_label + "' and '" + b.class_label + "'"});
    } else if (!a.upper_inclusive && !b.lower_inclusive) {
      issues.push_back({Kind::gap, a.upper, a.upper, "uncovered z-range [" + format_bound(a.upper) + ", " +
                                                         format_bound(a.upper) + "]"});
    } else if (a.upper_inclusive && b.lower_inclusive) {
      issues.push_back({Kind::overlap, a.upper, a.upper,
                        "overlapping z-range [" + format_bound(a.upper) + ", " + format_bound(a.upper) + "] between '" +
                            a.class_label + "' and '" + b.class_label + "'"});
    }
  }
  if (bands.back().upper != kInf) {
    const auto& l = bands.back();
    issues.push_back({Kind::gap, l.upper, kInf, "uncovered z-range " + range(l.upper, !l.upper_inclusive, kInf, false)});
  }
  return issues;
}

Band band_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "band must be an object");
  Band b;
  b.lower = bound_from_json(j, "lower", -kInf);
  b.upper = bound_from_json(j, "upper", kInf);
  b.lower_inclusive = j.value("lower_inclusive", true);
  b.upper_inclusive = j.value("upper_inclusive", false);
  if (!j.contains("class_label") || !j.at("class_label").is_string()) {
    throw Error(Errc::InvalidConfig, "band requires a string 'class_label'");
  }
  b.class_label = j.at("class_label").get<std::string>();
  b.phrase = j.value("phrase", b.class_label);
  return b;
}

nlohmann::json to_json(const Band& band) {
  nlohmann::json j;
  j["lower"] = std::isinf(band.lower) ? nlohmann::json(nullptr) : nlohmann::json(band.lower);
  j["upper"] = std::isinf(band.upper) ? nlohmann::json(nullptr) : nlohmann::json(band.upper);
  j["lower_inclusive"] = band.lower_inclusive;
  j["upper_inclusive"] = band.upper_inclusive;
  j["class_label"] = band.class_label;
  j["phrase"] = band.phrase;
  return j;
}

NormativeModel normative_model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "normative_model must be an object");
  NormativeModel m;
  try {
    m.model_id = j.at("model_id").get<std::string>();
    for (const auto& b : j.at("bands")) m.bands.push_back(band_from_json(b));
    if (j.contains("intensity_bands")) {
      for (const auto& b : j.at("intensity_bands")) m.intensity_bands.push_back(band_from_json(b));
    }
    m.sentence_template = j.at("sentence_template").get<std::string>();
    if (j.contains("evidence_threshold") && !j.at("evidence_threshold").is_null()) {
      m.evidence_threshold = j.at("evidence_threshold").get<double>();
    }
    m.evidence_template = j.value("evidence_template", "");
    if (j.contains("metric_phrases")) {
      m.metric_phrases = j.at("metric_phrases").get<std::map<std::string, std::vector<std::string>>>();
    }
    if (j.contains("metric_followups")) {
      m.metric_followups = j.at("metric_followups").get<std::map<std::string, std::vector<std::string>>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("normative_model: ") + e.what());
  }
  return m;
}

nlohmann::json to_json(const NormativeModel& m) {
  nlohmann::json j;
  j["model_id"] = m.model_id;
  j["bands"] = nlohmann::json::array();
  for (const auto& b : m.bands) j["bands"].push_back(to_json(b));
  if (!m.intensity_bands.empty()) {
    j["intensity_bands"] = nlohmann::json::array();
    for (const auto& b : m.intensity_bands) j["intensity_bands"].push_back(to_json(b));
  }
  j["sentence_template"] = m.sentence_template;
  j["evidence_threshold"] = m.evidence_threshold ? nlohmann::json(*m.evidence_threshold) : nlohmann::json(nullptr);
  j["evidence_template"] = m.evidence_template;
  j["metric_phrases"] = m.metric_phrases;
  j["metric_followups"] = m.metric_followups;
  j["class_labels"] = m.class_labels();
  return j;
}

}  // namespace wordalise
