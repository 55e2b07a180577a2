#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wordalise {

/// Machine-readable error codes shared by every module.
enum class Errc {
  // ingest
  MissingColumn,
  NonNumericValue,
  EmptyDataset,
  MalformedRow,
  MissingHeader,
  EmptyCorpus,
  InvalidConfig,
  UnresolvedPath,
  DuplicateApp,
  // stats
  EmptyInput,
  DegenerateMetric,
  EmptyCohort,
  LengthMismatch,
  OutOfRangeAnswer,
  BadWeight,
  EmptyContributions,
  // lexicon / promptforge
  MissingMetric,
  EmptySynthetic,
  NoFewShotToModify,
  // llmgateway
  AuthError,
  RateLimited,
  Timeout,
  TransportError,
  MalformedProviderResponse,
  // chatengine
  DimensionMismatch,
  ZeroVector,
  EmptyIndex,
  UnknownSession,
  // evalharness
  ProviderExhausted,
  InsufficientValidRecords,
  // catalog / service
  UnknownApp,
  UnknownEntity,
  BadRequest,
};

std::string_view to_string(Errc code) noexcept;

/// True for codes that originate at a model provider (HTTP 502 territory).
bool is_provider_error(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace wordalise
