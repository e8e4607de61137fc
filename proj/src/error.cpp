#include "fame/error.hpp"

namespace fame {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kSchema: return "schema_mismatch";
    case ErrorCode::kRejectedRows: return "rejected_rows";
    case ErrorCode::kMissingKey: return "missing_key";
    case ErrorCode::kRankDeficient: return "rank_deficient";
    case ErrorCode::kTransport: return "transport_error";
    case ErrorCode::kInternal: return "internal_error";
  }
  return "unknown";
}

nlohmann::json Error::to_json() const {
  nlohmann::json j;
  j["error"] = std::string(error_code_name(code_));
  j["message"] = what();
  if (!details_.empty()) j["details"] = details_;
  return j;
}

}  // namespace fame
