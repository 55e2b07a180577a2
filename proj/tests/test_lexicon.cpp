#include <doctest.h>

#include "support.hpp"
#include "wordalise/lexicon.hpp"

using namespace wordalise;
namespace t = wordalise::testing;

namespace {

SyntheticText synth(const Application& a, const t::Fixture& f) { return synthesize(f.entity, f.zv, a.config, a.model()); }

}  // namespace

TEST_CASE("golden sentences, byte for byte") {
  CHECK(t::sentence_for(synth(t::app("scout"), t::scout_golden()), "goals") == t::kScoutGolden);
  CHECK(t::sentence_for(synth(t::app("personality"), t::personality_golden()), "extraversion") ==
        t::kPersonalityGolden);
  CHECK(t::sentence_for(synth(t::app("wvs"), t::wvs_golden()), "skepticism") == t::kWvsGolden);
}

TEST_CASE("the details fixture yields its clause verbatim") {
  const auto s = t::sentence_for(synth(t::app("personality"), t::details_fixture()), "conscientiousness");
  CHECK(s == "The candidate is very efficient and organized. The candidate tends to be more careful or diligent. " +
                 t::kDetailsClause);
}

TEST_CASE("one sentence per metric in config order") {
  const auto& a = t::app("scout");
  const auto s = synth(a, t::scout_golden());
  REQUIRE(s.sentences.size() == a.config.metric_specs.size());
  for (std::size_t i = 0; i < s.sentences.size(); ++i) CHECK(s.sentences[i].metric == a.config.metric_specs[i].name);
  CHECK(s.joined == join_sentences(s.sentences));
  CHECK(s.sentences[0].class_label == "average");
}

TEST_CASE("evidence appears only beyond the threshold") {
  const auto& a = t::app("personality");
  auto f = t::personality_golden();
  f.zv.scores["extraversion"] = 1.0;  // threshold is strict
  CHECK(t::sentence_for(synth(a, f), "extraversion").find("In particular") == std::string::npos);
  f.zv.scores["extraversion"] = 0.4;
  CHECK(t::sentence_for(synth(a, f), "extraversion") ==
        "The candidate is relatively outgoing and energetic. The candidate tends to be more social.");
  f.zv.scores["extraversion"] = -2.5;
  const auto neg = t::sentence_for(synth(a, f), "extraversion");
  CHECK(neg.rfind("The candidate is extremely solitary and reserved. The candidate tends to be less social.", 0) == 0);
  CHECK(neg.find("In particular they said that") != std::string::npos);
}

TEST_CASE("negative evidence picks the most negative contribution") {
  const auto& a = t::app("personality");
  // Every reverse-keyed item sits at contribution -1; EXT5 (+1) cannot go below +1.
  auto f = t::make_fixture(a, "n", "N", "", "extraversion", -1.5, "EXT5");
  const auto& spec = *a.config.find_metric("extraversion");
  const auto clause = evidence_clause(spec, f.entity, stats::Sign::negative, a.model(), a.config);
  REQUIRE(clause.has_value());
  // Tie among the reverse-keyed items: the first one wins.
  std::size_t expect = 0;
  for (std::size_t i = 0; i < spec.questions.size(); ++i) {
    if (spec.questions[i].weight < 0) {
      expect = i;
      break;
    }
  }
  CHECK(*clause == "In particular they said that " + spec.questions[expect].evidence + ".");
}

TEST_CASE("missing metric in the z-vector") {
  const auto& a = t::app("scout");
  auto f = t::scout_golden();
  f.zv.scores.erase("goals");
  CHECK_THROWS_AS(synth(a, f), Error);
}

TEST_CASE("template filling") {
  CHECK(fill_template("{a} and {b}", {{"a", "x"}, {"b", "y"}}) == "x and y");
  CHECK(fill_template("{a} {unknown}", {{"a", "x"}}) == "x {unknown}");
  CHECK(fill_template("no braces", {}) == "no braces");
  CHECK(fill_template("dangling {", {}) == "dangling {");
  CHECK(past_tense_be("They") == "were");
  CHECK(past_tense_be("He") == "was");
  CHECK(past_tense_be("Peru") == "was");
}

TEST_CASE("default subject does not produce 'They was'") {
  const auto& a = t::app("scout");
  auto f = t::scout_golden();
  f.entity.subject.clear();
  const auto s = t::sentence_for(synth(a, f), "goals");
  CHECK(s.rfind("They were outstanding in goals", 0) == 0);
}

TEST_CASE("classify_factors matches band_of per metric") {
  const auto& a = t::app("wvs");
  const auto f = t::wvs_golden();
  const auto classes = classify_factors(f.zv, a.model());
  CHECK(classes.at("skepticism") == "above average");
  CHECK(classes.at("fairness") == "average");
  const auto& p = t::app("personality");
  CHECK(classify_factors(t::personality_golden().zv, p.model()).at("neuroticism") == "positive");  // z = 0
}
