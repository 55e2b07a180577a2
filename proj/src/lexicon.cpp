#include "wordalise/lexicon.hpp"

#include <algorithm>
#include <cmath>

#include "wordalise/error.hpp"

namespace wordalise {

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size() + 64);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const std::size_t open = tmpl.find('{', i);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    out.append(tmpl.substr(i, open - i));
    const std::string key(tmpl.substr(open + 1, close - open - 1));
    if (auto it = vars.find(key); it != vars.end()) {
      out += it->second;
    } else {
      out.append(tmpl.substr(open, close - open + 1));
    }
    i = close + 1;
  }
  return out;
}

std::vector<Band> personality_intensity_bands() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Mirrored around zero so the adverb depends on |z| only; z <= -2 is "extremely".
  return {
      {-inf, -2.0, false, true, "extremely", "extremely"},
      {-2.0, -1.0, false, true, "very", "very"},
      {-1.0, -0.5, false, true, "quite", "quite"},
      {-0.5, 0.5, false, false, "relatively", "relatively"},
      {0.5, 1.0, true, false, "quite", "quite"},
      {1.0, 2.0, true, false, "very", "very"},
      {2.0, inf, true, false, "extremely", "extremely"},
  };
}

std::string personality_adverb(double z) {
  const double a = std::abs(z);
  if (a >= 2.0) return "extremely";
  if (a >= 1.0) return "very";
  if (a >= 0.5) return "quite";
  return "relatively";
}

std::string past_tense_be(std::string_view subject) {
  return (subject == "They" || subject == "they") ? "were" : "was";
}

std::string join_sentences(const std::vector<Sentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out.push_back(' ');
    out += s.text;
  }
  return out;
}

std::optional<std::string> evidence_clause(const MetricSpec& metric, const Entity& entity, stats::Sign sign,
                                           const NormativeModel& model, const ApplicationConfig& config) {
  if (metric.questions.empty() || model.evidence_template.empty()) return std::nullopt;
  auto it = entity.answers.find(metric.name);
  if (it == entity.answers.end() || it->second.size() != metric.questions.size()) {
    throw Error(Errc::MissingMetric, "entity '" + entity.entity_id + "' has no answers for '" + metric.name + "'");
  }
  const auto& answers = it->second;

  Eigen::VectorXd values = Eigen::Map<const Eigen::VectorXd>(answers.data(), Eigen::Index(answers.size()));
  Eigen::VectorXd weights(values.size());
  for (Eigen::Index i = 0; i < weights.size(); ++i) weights(i) = metric.questions[std::size_t(i)].weight;
  const auto cv = stats::contributions(metric.name, values, weights);
  const auto top = std::size_t(stats::top_contributor(cv, sign));
  const Question& q = metric.questions[top];

  std::string answer;
  if (!q.answer_labels.empty()) {
    // Nearest answer label to the mean answer.
    const int lo = config.answer_scale ? config.answer_scale->min : 1;
    long idx = std::lround(answers[top]) - lo;
    idx = std::clamp(idx, 0L, long(q.answer_labels.size()) - 1);
    answer = q.answer_labels[std::size_t(idx)];
  }
  return fill_template(model.evidence_template, {{"evidence", q.evidence},
                                                 {"question", q.text},
                                                 {"answer", answer},
                                                 {"label", entity.label},
                                                 {"metric", metric.display_phrase}});
}

SyntheticText synthesize(const Entity& entity, const ZScoreVector& zv, const ApplicationConfig& config,
                         const NormativeModel& model) {
  SyntheticText out;
  out.entity_id = entity.entity_id;
  const std::string subject = entity.subject.empty() ? config.default_subject : entity.subject;

  for (const auto& metric : config.metric_specs) {
    auto zit = zv.scores.find(metric.name);
    if (zit == zv.scores.end()) {
      throw Error(Errc::MissingMetric, "z-vector for '" + entity.entity_id + "' lacks '" + metric.name + "'");
    }
    const double z = zit->second;
    const std::size_t band = model.band_index(z);

    std::map<std::string, std::string> vars = {
        {"subject", subject},
        {"was", past_tense_be(subject)},
        {"phrase", model.phrase_for(metric.name, band)},
        {"metric", metric.display_phrase},
        {"label", entity.label},
    };
    if (!model.intensity_bands.empty()) {
      vars["adverb"] = model.intensity_bands[band_index(z, model.intensity_bands)].phrase;
    }

    std::string text = fill_template(model.sentence_template, vars);
    if (auto follow = model.followup_for(metric.name, band)) text += " " + *follow;
    if (model.evidence_threshold && std::abs(z) > *model.evidence_threshold) {
      const auto sign = z >= 0 ? stats::Sign::positive : stats::Sign::negative;
      if (auto clause = evidence_clause(metric, entity, sign, model, config)) text += " " + *clause;
    }
    out.sentences.push_back({metric.name, std::move(text), model.bands[band].class_label});
  }
  out.joined = join_sentences(out.sentences);
  return out;
}

std::map<std::string, std::string> classify_factors(const ZScoreVector& zv, const NormativeModel& model) {
  std::map<std::string, std::string> out;
  for (const auto& [metric, z] : zv.scores) out[metric] = model.band_of(z).class_label;
  return out;
}

}  // namespace wordalise
