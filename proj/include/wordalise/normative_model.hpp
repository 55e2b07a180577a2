#pragma once

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace wordalise {

/// A z-score interval carrying a class label and the phrase used in text.
struct Band {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool lower_inclusive = true;
  bool upper_inclusive = false;
  std::string class_label;
  std::string phrase;

  bool contains(double z) const;
  bool empty() const;
};

/// How z-scores are read and phrased for one application.
///
/// `bands` partition the real line and define the reconstruction classes.
/// `intensity_bands` (optional) pick an adverb for the {adverb} placeholder.
/// `metric_phrases` / `metric_followups` override the band phrase per metric and
/// add a sentence after it; each list has one entry per band, in band order.
struct NormativeModel {
  std::string model_id;
  std::vector<Band> bands;
  std::vector<Band> intensity_bands;
  std::string sentence_template;
  std::optional<double> evidence_threshold;
  std::string evidence_template;
  std::map<std::string, std::vector<std::string>> metric_phrases;
  std::map<std::string, std::vector<std::string>> metric_followups;

  /// Distinct band labels in band order.
  std::vector<std::string> class_labels() const;
  std::size_t band_index(double z) const;
  const Band& band_of(double z) const;

  /// Phrase for band `index` of `metric`, honoring per-metric overrides.
  const std::string& phrase_for(const std::string& metric, std::size_t index) const;
  std::optional<std::string> followup_for(const std::string& metric, std::size_t index) const;
};

/// Index of the unique band containing z. Throws std::logic_error if the bands do
/// not cover z, which validate_config rules out for loaded models.
std::size_t band_index(double z, std::span<const Band> bands);

struct PartitionIssue {
  enum class Kind { gap, overlap, empty_band, disorder } kind;
  double from;
  double to;
  std::string message;
};

/// Interval-union check: the bands, in order, must tile (-inf, +inf) with no gaps
/// and no overlaps, honoring per-endpoint inclusivity.
std::vector<PartitionIssue> check_partition(std::span<const Band> bands);

Band band_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Band& band);
NormativeModel normative_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NormativeModel& model);

/// Renders a number with "inf"/"-inf" for the unbounded ends.
std::string format_bound(double v);

}  // namespace wordalise
