#include "wordalise/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "wordalise/csv.hpp"
#include "wordalise/error.hpp"
#include "wordalise/promptforge.hpp"

namespace wordalise {

using nlohmann::json;

namespace {

constexpr std::string_view kReconstructionSystem =
    "You read short descriptions and recover the data behind them. You answer only with JSON.";

std::string normalize_label(std::string_view s) {
  std::string out;
  bool space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(char(std::tolower(c)));
  }
  return out;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

json factors_to_json(const std::vector<FactorSpec>& factors) {
  json arr = json::array();
  for (const auto& f : factors) {
    json classes = json::array();
    for (const auto& c : f.classes) classes.push_back({{"label", c.label}, {"phrases", c.phrases}});
    arr.push_back({{"name", f.name}, {"description", f.description}, {"pattern", f.pattern}, {"classes", classes}});
  }
  return arr;
}

std::vector<Condition> conditions_of(ConditionSet s) {
  switch (s) {
    case ConditionSet::test: return {Condition::test};
    case ConditionSet::control: return {Condition::control};
    case ConditionSet::both: return {Condition::test, Condition::control};
  }
  return {};
}

std::string fmt3(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

json opt(std::optional<double> v) { return v ? json(*v) : json(nullptr); }
std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

Condition condition_from_string(std::string_view s) {
  if (s == "test") return Condition::test;
  if (s == "control") return Condition::control;
  throw Error(Errc::BadRequest, "unknown condition '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(Condition c) { return c == Condition::test ? "test" : "control"; }

std::string_view to_string(ConditionSet c) {
  switch (c) {
    case ConditionSet::test: return "test";
    case ConditionSet::control: return "control";
    case ConditionSet::both: return "both";
  }
  return "";
}

ConditionSet condition_set_from_string(std::string_view s) {
  if (s == "test") return ConditionSet::test;
  if (s == "control") return ConditionSet::control;
  if (s == "both") return ConditionSet::both;
  throw Error(Errc::BadRequest, "condition must be test, control or both (got '" + std::string(s) + "')");
}

std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::valid: return "valid";
    case RecordStatus::discarded: return "discarded";
    case RecordStatus::exhausted: return "exhausted";
  }
  return "";
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : a) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return splitmix(splitmix(splitmix(seed ^ h) ^ b) ^ c);
}

std::vector<FactorSpec> describe_factors(const Application& app) {
  const auto& model = app.model();
  const std::string& tmpl = model.sentence_template;
  const auto at = tmpl.find("{phrase}");
  const std::string fragment = at == std::string::npos ? std::string("{phrase}") : tmpl.substr(at);

  std::vector<FactorSpec> out;
  for (const auto& m : app.config.metric_specs) {
    FactorSpec f;
    f.name = m.name;
    f.description = m.display_phrase;
    f.pattern = fill_template(fragment, {{"metric", m.display_phrase}});
    for (std::size_t i = 0; i < model.bands.size(); ++i) {
      const auto& band = model.bands[i];
      auto it = std::find_if(f.classes.begin(), f.classes.end(),
                             [&](const ClassSpec& c) { return c.label == band.class_label; });
      if (it == f.classes.end()) {
        f.classes.push_back({band.class_label, {}});
        it = std::prev(f.classes.end());
      }
      const std::string& phrase = model.phrase_for(m.name, i);
      if (std::find(it->phrases.begin(), it->phrases.end(), phrase) == it->phrases.end()) it->phrases.push_back(phrase);
    }
    out.push_back(std::move(f));
  }
  return out;
}

PromptBundle reconstruction_bundle(const std::string& wordalisation, const std::vector<FactorSpec>& factors) {
  PromptBundle b;
  b.messages.push_back({Role::system, std::string(kReconstructionSystem), Tag::system});
  std::string q = "Here is a description:\n```" + wordalisation +
                  "```\nFor each factor below, pick the one class the description expresses. "
                  "Reply with a single JSON object mapping each factor name to a class label.\n";
  q += kFactorsMarker;
  q += factors_to_json(factors).dump();
  b.messages.push_back({Role::user, std::move(q), Tag::query});
  return b;
}

std::optional<ReconstructionRequest> parse_reconstruction_request(const PromptBundle& bundle) {
  for (auto it = bundle.messages.rbegin(); it != bundle.messages.rend(); ++it) {
    if (it->role != Role::user) continue;
    const auto pos = it->content.find(kFactorsMarker);
    if (pos == std::string::npos) return std::nullopt;
    auto body = fenced_body(std::string_view(it->content).substr(0, pos));
    if (!body) return std::nullopt;
    const auto start = pos + kFactorsMarker.size();
    const auto end = it->content.find('\n', start);
    const json j = json::parse(it->content.substr(start, end == std::string::npos ? std::string::npos : end - start),
                               nullptr, false);
    if (j.is_discarded() || !j.is_array()) return std::nullopt;
    ReconstructionRequest req{*body, {}};
    for (const auto& f : j) {
      FactorSpec spec{f.value("name", ""), f.value("description", ""), f.value("pattern", ""), {}};
      for (const auto& c : f.value("classes", json::array())) {
        spec.classes.push_back({c.value("label", ""), c.value("phrases", std::vector<std::string>{})});
      }
      req.factors.push_back(std::move(spec));
    }
    return req;
  }
  return std::nullopt;
}

Reconstruction parse_reconstruction(const std::string& reply, const std::vector<FactorSpec>& factors) {
  Reconstruction r;
  // Models like to wrap JSON in a fenced block; take the outermost braces.
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    r.failure = "reply contains no JSON object";
    return r;
  }
  json j = json::parse(reply.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    r.failure = "reply is not valid JSON";
    return r;
  }
  if (j.contains("classes") && j["classes"].is_object()) j = j["classes"];

  std::map<std::string, const json*> by_name;
  for (const auto& [k, v] : j.items()) by_name[normalize_label(k)] = &v;

  for (const auto& f : factors) {
    auto it = by_name.find(normalize_label(f.name));
    if (it == by_name.end() || !it->second->is_string()) {
      r.failure = "missing factor '" + f.name + "'";
      r.classes.clear();
      return r;
    }
    const std::string given = normalize_label(it->second->get<std::string>());
    auto c = std::find_if(f.classes.begin(), f.classes.end(),
                          [&](const ClassSpec& cs) { return normalize_label(cs.label) == given; });
    if (c == f.classes.end()) {
      r.failure = "unknown class '" + it->second->get<std::string>() + "' for factor '" + f.name + "'";
      r.classes.clear();
      return r;
    }
    r.classes[f.name] = c->label;
  }
  return r;
}

Reconstruction reconstruct(const std::string& wordalisation, const std::vector<FactorSpec>& factors,
                           ChatProvider& provider, const CompletionOptions& options) {
  const auto result = chat_complete(reconstruction_bundle(wordalisation, factors), provider, options);
  if (!result.ok()) return {{}, "finish_reason " + result.finish_reason};
  return parse_reconstruction(result.text, factors);
}

namespace {

struct Job {
  const Entity* entity;
  Condition condition;
};

PromptBundle generation_bundle(const Application& app, const Job& job) {
  if (job.condition == Condition::control) {
    return assemble_control(app.config, app.qa, app.few_shot, *job.entity);
  }
  return assemble(app.config, app.qa, app.few_shot, *job.entity, app.synthetic(*job.entity));
}

CompletionOptions gen_options(const EvalSettings& s, const Job& job, int attempt) {
  return {s.generation_temperature,
          mix_seed(s.seed, job.entity->entity_id, std::uint64_t(job.condition), std::uint64_t(attempt))};
}

std::vector<Job> make_jobs(const Application& app, const EvalSettings& s) {
  std::vector<Job> jobs;
  for (const auto& e : app.entities) {
    for (Condition c : conditions_of(s.condition)) jobs.push_back({&e, c});
  }
  return jobs;
}

// Runs fn(i) for i in [0, n) on a small pool; the first exception is rethrown.
template <class F>
void parallel_for(std::size_t n, int workers, F fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  const int k = std::max(1, std::min<int>(workers, int(n)));
  {
    std::vector<std::jthread> pool;
    for (int i = 1; i < k; ++i) pool.emplace_back(work);
    work();
  }
  if (error) std::rethrow_exception(error);
}

void check_settings(const EvalSettings& s) {
  if (s.repetitions_target < 1) throw Error(Errc::BadRequest, "repetitions must be >= 1");
  if (s.max_attempts_per_rep < 1) throw Error(Errc::BadRequest, "max attempts per repetition must be >= 1");
}

}  // namespace

std::vector<Wordalisation> generate_wordalisations(const Application& app, const EvalSettings& settings,
                                                   ChatProvider& generator) {
  check_settings(settings);
  const auto jobs = make_jobs(app, settings);
  std::vector<std::vector<Wordalisation>> per_job(jobs.size());
  parallel_for(jobs.size(), settings.workers, [&](std::size_t i) {
    const PromptBundle bundle = generation_bundle(app, jobs[i]);
    for (int a = 0; a < settings.repetitions_target; ++a) {
      auto res = chat_complete(bundle, generator, gen_options(settings, jobs[i], a));
      per_job[i].push_back({jobs[i].entity->entity_id, jobs[i].condition, a, std::move(res.text)});
    }
  });
  std::vector<Wordalisation> out;
  for (auto& v : per_job) std::move(v.begin(), v.end(), std::back_inserter(out));
  return out;
}

EvalRun run_evaluation(const Application& app, const EvalSettings& settings, ChatProvider& generator,
                       ChatProvider& reconstructor) {
  check_settings(settings);
  const auto factors = describe_factors(app);
  const auto jobs = make_jobs(app, settings);
  const int cap = settings.repetitions_target * settings.max_attempts_per_rep;

  std::vector<std::vector<ReconstructionRecord>> per_job(jobs.size());
  parallel_for(jobs.size(), settings.workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    const PromptBundle bundle = generation_bundle(app, job);
    const auto truth = app.true_classes(*job.entity);
    int valid = 0;
    for (int attempt = 0; attempt < cap && valid < settings.repetitions_target; ++attempt) {
      ReconstructionRecord rec;
      rec.entity_id = job.entity->entity_id;
      rec.condition = job.condition;
      rec.attempt = attempt;
      rec.true_classes = truth;
      try {
        const auto options = gen_options(settings, job, attempt);
        auto gen = chat_complete(bundle, generator, options);
        if (!gen.ok()) {
          rec.status = RecordStatus::discarded;
          rec.failure = "generation finish_reason " + gen.finish_reason;
        } else {
          rec.wordalisation = std::move(gen.text);
          const CompletionOptions rec_options{settings.reconstruction_temperature,
                                              mix_seed(*options.seed, "reconstruct")};
          auto r = reconstruct(rec.wordalisation, factors, reconstructor, rec_options);
          if (r.ok()) {
            rec.predicted = std::move(r.classes);
            ++valid;
          } else {
            rec.status = RecordStatus::discarded;
            rec.failure = *r.failure;
          }
        }
      } catch (const Error& e) {
        if (!is_provider_error(e.code())) throw;
        rec.status = RecordStatus::exhausted;
        rec.failure = e.what();
      }
      per_job[i].push_back(std::move(rec));
    }
  });

  EvalRun run;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const int valid = int(std::count_if(per_job[i].begin(), per_job[i].end(),
                                        [](const ReconstructionRecord& r) { return r.valid(); }));
    if (valid == 0) {
      const std::string last = per_job[i].empty() ? std::string() : per_job[i].back().failure;
      throw Error(Errc::ProviderExhausted, "no valid reconstruction for '" + jobs[i].entity->entity_id + "' (" +
                                               std::string(to_string(jobs[i].condition)) + ") after " +
                                               std::to_string(per_job[i].size()) + " attempts: " + last);
    }
    if (valid < settings.repetitions_target) run.shortfalls.push_back({jobs[i].entity->entity_id, jobs[i].condition, valid});
    std::move(per_job[i].begin(), per_job[i].end(), std::back_inserter(run.records));
  }
  return run;
}

bool EvaluationReport::operator==(const EvaluationReport& o) const { return to_json(*this) == to_json(o); }

EvaluationReport accuracy(const Application& app, const std::vector<ReconstructionRecord>& records,
                          const EvalSettings& settings) {
  EvaluationReport rep;
  rep.app_id = app.config.app_id;
  rep.model_id = app.model().model_id;
  rep.class_labels = app.model().class_labels();
  rep.baseline = rep.class_labels.empty() ? 0.0 : 1.0 / double(rep.class_labels.size());
  rep.settings = {{"app_id", settings.app_id.empty() ? app.config.app_id : settings.app_id},
                  {"repetitions_target", settings.repetitions_target},
                  {"condition", to_string(settings.condition)},
                  {"max_attempts_per_rep", settings.max_attempts_per_rep},
                  {"seed", settings.seed},
                  {"generation_temperature", opt(settings.generation_temperature)},
                  {"reconstruction_temperature", opt(settings.reconstruction_temperature)}};

  const auto conds = conditions_of(settings.condition);
  for (Condition c : conds) rep.counts[std::string(to_string(c))];

  std::set<std::string> entities;
  std::map<std::pair<std::string, Condition>, int> valid_per_pair;
  for (Condition c : conds) {
    for (const auto& e : app.entities) valid_per_pair[{e.entity_id, c}] = 0;
  }
  for (const auto& r : records) {
    entities.insert(r.entity_id);
    auto& cnt = rep.counts[std::string(to_string(r.condition))];
    ++cnt.generated;
    switch (r.status) {
      case RecordStatus::valid: ++cnt.valid; ++valid_per_pair[{r.entity_id, r.condition}]; break;
      case RecordStatus::discarded: ++cnt.discarded; break;
      case RecordStatus::exhausted: ++cnt.exhausted; break;
    }
  }
  rep.entities = long(entities.size());
  for (const auto& e : app.entities) {
    for (Condition c : conds) {
      const int v = valid_per_pair[{e.entity_id, c}];
      if (v < settings.repetitions_target) rep.shortfalls.push_back({e.entity_id, c, v});
    }
  }

  double sum_t = 0, sum_c = 0;
  int n_t = 0, n_c = 0;
  for (const auto& m : app.config.metric_specs) {
    FactorAccuracy fa{m.name, m.display_phrase, std::nullopt, std::nullopt, 0, 0};
    long hit_t = 0, hit_c = 0;
    for (const auto& r : records) {
      if (!r.valid()) continue;
      auto p = r.predicted.find(m.name);
      auto t = r.true_classes.find(m.name);
      const bool hit = p != r.predicted.end() && t != r.true_classes.end() && p->second == t->second;
      if (r.condition == Condition::test) {
        ++fa.test_n;
        hit_t += hit;
      } else {
        ++fa.control_n;
        hit_c += hit;
      }
    }
    if (fa.test_n) {
      fa.test = double(hit_t) / double(fa.test_n);
      sum_t += *fa.test;
      ++n_t;
    }
    if (fa.control_n) {
      fa.control = double(hit_c) / double(fa.control_n);
      sum_c += *fa.control;
      ++n_c;
    }
    rep.factors.push_back(std::move(fa));
  }
  if (n_t) rep.mean_test = sum_t / n_t;
  if (n_c) rep.mean_control = sum_c / n_c;
  return rep;
}

EvaluationReport evaluate(const Application& app, const EvalSettings& settings, ChatProvider& generator,
                          ChatProvider& reconstructor) {
  const EvalRun run = run_evaluation(app, settings, generator, reconstructor);
  return accuracy(app, run.records, settings);
}

json to_json(const EvaluationReport& r) {
  json j;
  j["app_id"] = r.app_id;
  j["model_id"] = r.model_id;
  j["class_labels"] = r.class_labels;
  j["baseline"] = r.baseline;
  j["factors"] = json::array();
  for (const auto& f : r.factors) {
    j["factors"].push_back({{"factor", f.factor},
                            {"description", f.description},
                            {"test", opt(f.test)},
                            {"control", opt(f.control)},
                            {"test_n", f.test_n},
                            {"control_n", f.control_n}});
  }
  j["mean_test"] = opt(r.mean_test);
  j["mean_control"] = opt(r.mean_control);
  j["counts"] = json::object();
  for (const auto& [k, c] : r.counts) {
    j["counts"][k] = {{"generated", c.generated}, {"valid", c.valid}, {"discarded", c.discarded}, {"exhausted", c.exhausted}};
  }
  j["entities"] = r.entities;
  j["shortfalls"] = json::array();
  for (const auto& s : r.shortfalls) {
    j["shortfalls"].push_back({{"entity_id", s.entity_id}, {"condition", to_string(s.condition)}, {"valid", s.valid}});
  }
  j["settings"] = r.settings;
  return j;
}

EvaluationReport report_from_json(const json& j) {
  EvaluationReport r;
  r.app_id = j.at("app_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.class_labels = j.at("class_labels").get<std::vector<std::string>>();
  r.baseline = j.at("baseline").get<double>();
  for (const auto& f : j.at("factors")) {
    r.factors.push_back({f.at("factor").get<std::string>(), f.value("description", ""), opt_from(f, "test"),
                         opt_from(f, "control"), f.value("test_n", 0L), f.value("control_n", 0L)});
  }
  r.mean_test = opt_from(j, "mean_test");
  r.mean_control = opt_from(j, "mean_control");
  for (const auto& [k, c] : j.at("counts").items()) {
    r.counts[k] = {c.at("generated").get<long>(), c.at("valid").get<long>(), c.at("discarded").get<long>(),
                   c.at("exhausted").get<long>()};
  }
  r.entities = j.value("entities", 0L);
  for (const auto& s : j.value("shortfalls", json::array())) {
    r.shortfalls.push_back({s.at("entity_id").get<std::string>(), condition_from_string(s.at("condition").get<std::string>()),
                            s.at("valid").get<int>()});
  }
  r.settings = j.value("settings", json::object());
  return r;
}

std::string render_table(const EvaluationReport& r) {
  std::size_t w = std::string_view("factor").size();
  for (const auto& f : r.factors) w = std::max(w, f.factor.size());
  w = std::max(w, std::string_view("mean").size());

  std::ostringstream out;
  auto row = [&](const std::string& name, const std::string& t, const std::string& c, const std::string& b) {
    out << name << std::string(w - name.size(), ' ') << " | " << t << std::string(t.size() < 8 ? 8 - t.size() : 0, ' ')
        << "| " << c << std::string(c.size() < 8 ? 8 - c.size() : 0, ' ') << "| " << b << "\n";
  };
  row("factor", "test", "control", "baseline");
  out << std::string(w, '-') << "-|---------|---------|---------\n";
  const std::string base = fmt3(r.baseline);
  for (const auto& f : r.factors) row(f.factor, fmt3(f.test), fmt3(f.control), base);
  row("mean", fmt3(r.mean_test), fmt3(r.mean_control), base);
  return out.str();
}

std::string records_csv(const std::vector<ReconstructionRecord>& records) {
  std::string out = csv::format_row({"entity_id", "condition", "attempt", "status", "factor", "true_class",
                                     "predicted_class", "correct", "failure"}) + "\n";
  for (const auto& r : records) {
    const std::string cond(to_string(r.condition)), status(to_string(r.status)), attempt = std::to_string(r.attempt);
    if (!r.valid()) {
      out += csv::format_row({r.entity_id, cond, attempt, status, "", "", "", "", r.failure}) + "\n";
      continue;
    }
    for (const auto& [factor, truth] : r.true_classes) {
      auto p = r.predicted.find(factor);
      const std::string pred = p == r.predicted.end() ? "" : p->second;
      out += csv::format_row({r.entity_id, cond, attempt, status, factor, truth, pred, pred == truth ? "1" : "0", ""}) + "\n";
    }
  }
  return out;
}

}  // namespace wordalise
