#pragma once

#include <stdexcept>
#include <string>

namespace rulegrad {

// Shape or dimensionality disagreement between operands.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Numeric-guard failure: zero norms, log of non-positive values, non-finite results.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Violated API contract (bad label index, empty set, negative margin, ...).
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Dataset ingestion / validation failure.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// CLI / configuration failure.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace rulegrad
