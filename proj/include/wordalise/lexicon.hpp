#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wordalise/ingest.hpp"
#include "wordalise/normative_model.hpp"
#include "wordalise/stats.hpp"

namespace wordalise {

struct ZScoreVector {
  std::string entity_id;
  std::map<std::string, double> scores;
  std::map<std::string, double> raw;
};

struct Sentence {
  std::string metric;
  std::string text;
  std::string class_label;
};

/// The "what data to use" passage for one entity.
struct SyntheticText {
  std::string entity_id;
  std::vector<Sentence> sentences;  // one per metric, config order
  std::string joined;
};

/// Replaces {name} placeholders; unknown placeholders are left untouched.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Adverb for a personality z-score; depends on |z| only.
std::string personality_adverb(double z);

/// The intensity table personality_adverb() uses, as bands.
std::vector<Band> personality_intensity_bands();

/// "were" for a plural "they", "was" otherwise.
std::string past_tense_be(std::string_view subject);

std::optional<std::string> evidence_clause(const MetricSpec& metric, const Entity& entity, stats::Sign sign,
                                           const NormativeModel& model, const ApplicationConfig& config);

SyntheticText synthesize(const Entity& entity, const ZScoreVector& zv, const ApplicationConfig& config,
                         const NormativeModel& model);

/// Class label of the band containing each metric's z-score.
std::map<std::string, std::string> classify_factors(const ZScoreVector& zv, const NormativeModel& model);

std::string join_sentences(const std::vector<Sentence>& sentences);

}  // namespace wordalise
