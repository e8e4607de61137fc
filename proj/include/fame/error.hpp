#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace fame {

enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kParse,
  kSchema,
  kRejectedRows,
  kMissingKey,
  kRankDeficient,
  kTransport,
  kInternal,
};

std::string_view error_code_name(ErrorCode code);

// All library failures surface as fame::Error. `details` carries structured
// context (row lists, column names) for the CLI's machine-readable output.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const { return code_; }
  const nlohmann::json& details() const { return details_; }

  nlohmann::json to_json() const;

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

}  // namespace fame
