#pragma once

#include <stdexcept>
#include <string>

namespace eaglemine {

/// Malformed input data (bad edge line, bad file header, ...).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input violates a structural precondition (side mixing, wrong graph mode, ...).
struct StructuralError : std::runtime_error {
    explicit StructuralError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An island or matrix too degenerate to work with.
struct DegenerateError : std::runtime_error {
    explicit DegenerateError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace eaglemine
