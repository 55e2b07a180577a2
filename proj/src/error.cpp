#include "wordalise/error.hpp"

namespace wordalise {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::NonNumericValue: return "NonNumericValue";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::MissingHeader: return "MissingHeader";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::UnresolvedPath: return "UnresolvedPath";
    case Errc::DuplicateApp: return "DuplicateApp";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::DegenerateMetric: return "DegenerateMetric";
    case Errc::EmptyCohort: return "EmptyCohort";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::OutOfRangeAnswer: return "OutOfRangeAnswer";
    case Errc::BadWeight: return "BadWeight";
    case Errc::EmptyContributions: return "EmptyContributions";
    case Errc::MissingMetric: return "MissingMetric";
    case Errc::EmptySynthetic: return "EmptySynthetic";
    case Errc::NoFewShotToModify: return "NoFewShotToModify";
    case Errc::AuthError: return "AuthError";
    case Errc::RateLimited: return "RateLimited";
    case Errc::Timeout: return "Timeout";
    case Errc::TransportError: return "TransportError";
    case Errc::MalformedProviderResponse: return "MalformedProviderResponse";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::EmptyIndex: return "EmptyIndex";
    case Errc::UnknownSession: return "UnknownSession";
    case Errc::ProviderExhausted: return "ProviderExhausted";
    case Errc::InsufficientValidRecords: return "InsufficientValidRecords";
    case Errc::UnknownApp: return "UnknownApp";
    case Errc::UnknownEntity: return "UnknownEntity";
    case Errc::BadRequest: return "BadRequest";
  }
  return "Unknown";
}

bool is_provider_error(Errc code) noexcept {
  switch (code) {
    case Errc::AuthError:
    case Errc::RateLimited:
    case Errc::Timeout:
    case Errc::TransportError:
    case Errc::MalformedProviderResponse:
    case Errc::ProviderExhausted:
      return true;
    default:
      return false;
  }
}

Error::Error(Errc code, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace wordalise
