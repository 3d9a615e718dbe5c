#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace credsql {

enum class ErrorCode {
  FileNotFound,
  MalformedManifest,
  DuplicateDbId,
  UnresolvedTable,
  EmptyText,
  ProviderUnavailable,
  ProviderMismatch,
  DimMismatch,
  EmptyQuery,
  InvalidArgument,
  InvalidThreshold,
  DuplicateUuid,
  EmptyCentroids,
  ZeroSize,
  EmptyQuestion,
  UnknownTable,
  EmptyGold,
  EdlParse,
  UnsupportedShape,
  LlmUnavailable,
  UnparseableSelection,
  NoValidEdl,
  NoValidSql,
  EngineError,
  Timeout,
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every domain failure in the toolkit. The code is stable
/// and is what callers (and the CLI exit-code mapping) switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace credsql
