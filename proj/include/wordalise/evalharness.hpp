#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordalise/catalog.hpp"
#include "wordalise/llmgateway.hpp"

namespace wordalise {

enum class Condition { test, control };
enum class ConditionSet { test, control, both };

std::string_view to_string(Condition c);
std::string_view to_string(ConditionSet c);
ConditionSet condition_set_from_string(std::string_view s);

struct EvalSettings {
  std::string app_id;
  int repetitions_target = 10;    // valid reconstructions wanted per (entity, condition)
  ConditionSet condition = ConditionSet::both;
  int max_attempts_per_rep = 3;   // attempt cap = target * this
  std::uint64_t seed = 0;
  int workers = 4;
  std::optional<double> generation_temperature;            // provider default
  std::optional<double> reconstruction_temperature = 0.0;
};

// ---------------------------------------------------------------------------
// Reconstruction request format. The prompt carries the wordalisation in a
// fenced block and the closed class vocabulary as one line of JSON so both a
// live model and the offline mocks can read it.

struct ClassSpec {
  std::string label;
  std::vector<std::string> phrases;  // normative phrases that express this class
};

struct FactorSpec {
  std::string name;
  std::string description;
  std::string pattern;  // sentence fragment around {phrase}, e.g. "{phrase} in goals adjusted ..."
  std::vector<ClassSpec> classes;
};

struct ReconstructionRequest {
  std::string wordalisation;
  std::vector<FactorSpec> factors;
};

inline constexpr std::string_view kFactorsMarker = "Factors and classes (JSON): ";

std::vector<FactorSpec> describe_factors(const Application& app);
PromptBundle reconstruction_bundle(const std::string& wordalisation, const std::vector<FactorSpec>& factors);
std::optional<ReconstructionRequest> parse_reconstruction_request(const PromptBundle& bundle);

// ---------------------------------------------------------------------------

/// Parsed class per factor, or the reason parsing failed.
struct Reconstruction {
  std::map<std::string, std::string> classes;
  std::optional<std::string> failure;

  bool ok() const { return !failure.has_value(); }
};

/// Parses a model reply against the closed vocabulary. Missing factors, unknown
/// labels and non-JSON replies are failures. Matching ignores case and collapses
/// whitespace.
Reconstruction parse_reconstruction(const std::string& reply, const std::vector<FactorSpec>& factors);

Reconstruction reconstruct(const std::string& wordalisation, const std::vector<FactorSpec>& factors,
                           ChatProvider& provider, const CompletionOptions& options = {});

struct Wordalisation {
  std::string entity_id;
  Condition condition;
  int attempt = 0;
  std::string text;
};

/// One completion per (entity, condition, repetition); no reconstruction.
std::vector<Wordalisation> generate_wordalisations(const Application& app, const EvalSettings& settings,
                                                   ChatProvider& generator);

enum class RecordStatus { valid, discarded, exhausted };
std::string_view to_string(RecordStatus s);

struct ReconstructionRecord {
  std::string entity_id;
  Condition condition = Condition::test;
  int attempt = 0;
  std::string wordalisation;
  std::map<std::string, std::string> predicted;
  std::map<std::string, std::string> true_classes;
  RecordStatus status = RecordStatus::valid;
  std::string failure;

  bool valid() const { return status == RecordStatus::valid; }
};

struct Shortfall {
  std::string entity_id;
  Condition condition;
  int valid = 0;
};

struct EvalRun {
  std::vector<ReconstructionRecord> records;  // entity order, then condition, then attempt
  std::vector<Shortfall> shortfalls;          // (entity, condition) pairs that missed the quota
};

/// Retry-until-quota generation + reconstruction. Throws ProviderExhausted when a
/// pair ends with no valid reconstruction at all.
EvalRun run_evaluation(const Application& app, const EvalSettings& settings, ChatProvider& generator,
                       ChatProvider& reconstructor);

struct ConditionCounts {
  long generated = 0;
  long valid = 0;
  long discarded = 0;
  long exhausted = 0;
};

struct FactorAccuracy {
  std::string factor;
  std::string description;
  std::optional<double> test;
  std::optional<double> control;
  long test_n = 0;
  long control_n = 0;
};

struct EvaluationReport {
  std::string app_id;
  std::string model_id;
  std::vector<std::string> class_labels;
  double baseline = 0;
  std::vector<FactorAccuracy> factors;
  std::optional<double> mean_test;
  std::optional<double> mean_control;
  std::map<std::string, ConditionCounts> counts;  // keyed "test" / "control"
  long entities = 0;
  std::vector<Shortfall> shortfalls;
  nlohmann::json settings;

  bool operator==(const EvaluationReport&) const;
};

EvaluationReport accuracy(const Application& app, const std::vector<ReconstructionRecord>& records,
                          const EvalSettings& settings);
EvaluationReport evaluate(const Application& app, const EvalSettings& settings, ChatProvider& generator,
                          ChatProvider& reconstructor);

nlohmann::json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);
/// Per-factor table: factor | test | control | baseline.
std::string render_table(const EvaluationReport& report);
std::string records_csv(const std::vector<ReconstructionRecord>& records);

/// Stable 64-bit mix used to derive per-request seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace wordalise
