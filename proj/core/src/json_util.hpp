#pragma once

#include <string>

#include <json.hpp>

#include "fewshot/error.hpp"

namespace fewshot::detail {

inline nlohmann::json parse_json(const std::string& text, const std::string& what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(what + ": invalid JSON: " + e.what());
    }
}

// Runs a JSON extraction block, converting nlohmann exceptions (missing
// keys, wrong types) into DataError with context.
template <typename Fn>
auto with_json_errors(const std::string& what, Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(what + ": " + e.what());
    }
}

} // namespace fewshot::detail
