#pragma once

#include <stdexcept>
#include <string>

namespace fewshot {

/// Bad flags, malformed config files, invalid field values.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Problems with input data: missing files, malformed manifests, contract violations.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failures: zero-norm vectors, non-finite gradients or losses.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace fewshot
