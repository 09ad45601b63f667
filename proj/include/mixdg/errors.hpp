#pragma once

#include <stdexcept>
#include <string>

namespace mixdg {

// One exception family; the subtype names the contract that was broken.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error { using Error::Error; };   // shape mismatch
struct StateError : Error { using Error::Error; };       // call-order / staleness
struct ConfigError : Error { using Error::Error; };      // bad configuration value
struct DataError : Error { using Error::Error; };        // dataset precondition
struct GenerationError : Error { using Error::Error; };  // mix generation impossible
struct SplitError : Error { using Error::Error; };       // train/val split impossible
struct IngestError : Error { using Error::Error; };      // CSV parse failure
struct ContractError : Error { using Error::Error; };    // caller broke an API contract
struct LabelError : Error { using Error::Error; };        // malformed soft label
struct CovarianceError : Error { using Error::Error; };   // too few rows for covariance
struct NumericError : Error { using Error::Error; };     // NaN/Inf where finite required
struct IoError : Error { using Error::Error; };          // filesystem failure

}  // namespace mixdg
