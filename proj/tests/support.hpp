#pragma once

// Fixtures and independent oracles shared by the unit and acceptance binaries.
// Oracles here deliberately avoid the library's own helpers: plain loops, long
// double accumulation, hand-written threshold tables.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "wordalise/catalog.hpp"
#include "wordalise/lexicon.hpp"
#include "wordalise/promptforge.hpp"

namespace wordalise::testing {

inline std::filesystem::path data_dir() { return WORDALISE_TEST_DATA_DIR; }

inline const Catalog& bundled() {
  static const Catalog c = Catalog::load_directory(data_dir());
  return c;
}

inline const Application& app(std::string_view id) { return bundled().at(id); }

/// Population mean / std with long double accumulation.
struct NaiveStats {
  long double mean = 0, std = 0;
};

inline NaiveStats naive_stats(const std::vector<double>& xs) {
  long double s = 0;
  for (double x : xs) s += x;
  const long double m = s / xs.size();
  long double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / xs.size())};
}

/// O(n^2) percentile/rank: compare every pair.
inline std::pair<double, long> naive_percentile_rank(double x, const std::vector<double>& cohort) {
  long le = 0, gt = 0;
  for (double y : cohort) {
    if (y <= x) ++le;
    if (y > x) ++gt;
  }
  return {double(le) / double(cohort.size()), gt + 1};
}

/// Hand-written threshold tables, independent of the JSON band definitions.
inline std::string scout_class(double z) {
  if (z < -1.0) return "poor";
  if (z < -0.5) return "below average";
  if (z < 0.5) return "average";
  if (z < 1.0) return "good";
  if (z < 1.5) return "excellent";
  return "outstanding";
}

inline std::string wvs_class(double z) {
  if (z < -2.0) return "far below average";
  if (z < -1.0) return "below average";
  if (z < 1.0) return "average";
  if (z < 2.0) return "above average";
  return "far above average";
}

inline std::string personality_class(double z) { return z < 0.0 ? "negative" : "positive"; }

inline std::string brute_class(std::string_view app_id, double z) {
  if (app_id == "scout") return scout_class(z);
  if (app_id == "wvs") return wvs_class(z);
  return personality_class(z);
}

/// Grid z = -3.00, -2.99, ..., 3.00 built from integers so the endpoints are exact.
inline std::vector<double> sweep_grid() {
  std::vector<double> g;
  for (int i = -300; i <= 300; ++i) g.push_back(i / 100.0);
  return g;
}

/// Exhaustive oracles for questionnaire scoring.
inline long oracle_score(const std::vector<int>& answers, const std::vector<int>& weights) {
  long s = 0;
  for (std::size_t i = 0; i < answers.size(); ++i) s += long(answers[i]) * weights[i];
  return s;
}

inline std::size_t oracle_top(const std::vector<int>& answers, const std::vector<int>& weights, bool positive) {
  // First index whose contribution equals the extreme value.
  std::vector<long> c(answers.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = long(answers[i]) * weights[i];
  const long extreme = positive ? *std::max_element(c.begin(), c.end()) : *std::min_element(c.begin(), c.end());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == extreme) return i;
  }
  return 0;
}

/// Brute-force cosine ranking: every score from scratch, then sort by (score desc, index asc).
inline std::vector<std::size_t> brute_rank(const std::vector<std::vector<double>>& items, const std::vector<double>& q) {
  auto cos = [](const std::vector<double>& a, const std::vector<double>& b) {
    long double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      d += (long double)a[i] * b[i];
      na += (long double)a[i] * a[i];
      nb += (long double)b[i] * b[i];
    }
    return double(d / (std::sqrt(na) * std::sqrt(nb)));
  };
  std::vector<std::pair<double, std::size_t>> s;
  for (std::size_t i = 0; i < items.size(); ++i) s.push_back({cos(items[i], q), i});
  std::sort(s.begin(), s.end(), [](auto a, auto b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  std::vector<std::size_t> out;
  for (auto& p : s) out.push_back(p.second);
  return out;
}

// ---------------------------------------------------------------------------
// Golden fixtures: an entity plus a z-vector chosen to land in the quoted bands.

inline const std::string kScoutGolden =
    "He was outstanding in goals adjusted for possession per 90 minutes compared to other players in the same "
    "playing position.";
inline const std::string kPersonalityGolden =
    "The candidate is very outgoing and energetic. The candidate tends to be more social. In particular they said "
    "that they start conversations.";
inline const std::string kWvsGolden =
    "According to the WVS, Peru was found to be above averagely skeptical compared to other countries in the same "
    "wave. In response to the question 'How much confidence do you have in the parliament?', on average "
    "participants indicated that they have 'none at all'.";
inline const std::string kDetailsClause = "In particular they said that they pay attention to details.";

struct Fixture {
  Entity entity;
  ZScoreVector zv;
};

/// Every metric at z = 0 except `metric` at `z`. For z > 0 and a positively
/// weighted `top_question`, that question is the unique largest contribution.
inline Fixture make_fixture(const Application& a, const std::string& entity_id, const std::string& label,
                            const std::string& subject, const std::string& metric, double z,
                            const std::string& top_question = {}) {
  Fixture f;
  f.entity.entity_id = entity_id;
  f.entity.label = label;
  f.entity.subject = subject;
  f.zv.entity_id = entity_id;
  const int lo = a.config.answer_scale ? a.config.answer_scale->min : 1;
  const int hi = a.config.answer_scale ? a.config.answer_scale->max : 5;
  for (const auto& m : a.config.metric_specs) {
    f.zv.scores[m.name] = m.name == metric ? z : 0.0;
    f.entity.values[m.name] = 0.0;
    std::vector<double> answers;
    for (const auto& q : m.questions) {
      const bool top = q.id == top_question;
      // Positive z: top question at the maximum, every other contribution minimal.
      const bool push_up = (q.weight > 0) == (z >= 0);
      answers.push_back(top ? (push_up ? hi : lo) : (push_up ? lo : hi));
    }
    if (!answers.empty()) f.entity.answers[m.name] = answers;
  }
  return f;
}

inline Fixture scout_golden() { return make_fixture(app("scout"), "golden", "Golden Player", "He", "goals", 1.8); }
inline Fixture personality_golden() {
  return make_fixture(app("personality"), "golden", "Golden Candidate", "", "extraversion", 1.5, "EXT5");
}
inline Fixture wvs_golden() {
  return make_fixture(app("wvs"), "peru", "Peru", "", "skepticism", 1.5, "conf_parliament");
}
inline Fixture details_fixture() {
  return make_fixture(app("personality"), "details", "Detail Candidate", "", "conscientiousness", 1.2, "CSN3");
}

/// The sentence synthesize() produced for `metric`.
inline std::string sentence_for(const SyntheticText& s, const std::string& metric) {
  for (const auto& x : s.sentences) {
    if (x.metric == metric) return x.text;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Structural diff between a test bundle and its control twin. Allowed
// differences: the prior-knowledge sentence on the instructions, the first
// exemplar's user turn, and the synthetic text dropped from the final message.

inline std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

inline std::vector<std::string> protocol_violations(const PromptBundle& test, const PromptBundle& control,
                                                    const std::string& synthetic) {
  std::vector<std::string> v;
  const std::string sentence(kControlSentence);
  if (test.messages.size() != control.messages.size()) {
    v.push_back("message counts differ");
    return v;
  }
  std::size_t instr = 0, first_shot = 0;
  bool seen_shot = false;
  for (std::size_t i = 0; i < test.messages.size(); ++i) {
    if (test.messages[i].tag == Tag::instructions) instr = i;
    if (test.messages[i].tag == Tag::few_shot && !seen_shot) {
      first_shot = i;
      seen_shot = true;
    }
  }
  if (!seen_shot) v.push_back("no few-shot turn");
  const std::size_t last = test.messages.size() - 1;

  std::size_t sentence_hits = 0;
  for (std::size_t i = 0; i < test.messages.size(); ++i) {
    const auto& a = test.messages[i];
    const auto& b = control.messages[i];
    sentence_hits += count_of(b.content, sentence);
    if (count_of(a.content, sentence)) v.push_back("test bundle carries the control sentence");
    if (a.role != b.role) v.push_back("role differs at " + std::to_string(i));
    if (i == last) {
      if (a.tag != Tag::data || b.tag != Tag::subject) v.push_back("final tags are not data/subject");
      if (a.content.find(synthetic) == std::string::npos) v.push_back("test lacks the synthetic text");
      if (b.content.find(synthetic) != std::string::npos) v.push_back("control still has the synthetic text");
      std::string stripped = a.content;
      stripped.erase(stripped.find(" " + synthetic), synthetic.size() + 1);
      if (stripped != b.content) v.push_back("final message differs beyond the synthetic text");
      continue;
    }
    if (a.tag != b.tag) v.push_back("tag differs at " + std::to_string(i));
    if (i == instr) {
      if (b.content != a.content + " " + sentence) v.push_back("instructions differ beyond the control sentence");
    } else if (i == first_shot) {
      if (a.content == b.content) v.push_back("first exemplar user turn not stripped");
      if (b.content.size() >= a.content.size()) v.push_back("stripped exemplar is not shorter");
    } else if (a.content != b.content) {
      v.push_back("unexpected difference at " + std::to_string(i) + " (" + std::string(to_string(a.tag)) + ")");
    }
  }
  if (sentence_hits != 1) v.push_back("control sentence appears " + std::to_string(sentence_hits) + " times");
  if (seen_shot && control.messages[first_shot + 1].content != test.messages[first_shot + 1].content) {
    v.push_back("exemplar assistant turn changed");
  }
  return v;
}

}  // namespace wordalise::testing
