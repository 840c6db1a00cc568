#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tkz {

/// Operand shapes are incompatible for the requested operation.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed tensor file; `offset` is the byte position where decoding failed.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iteration produced a non-finite iterate or an invalid step it cannot recover from.
class BreakdownError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense analysis routine asked to work on an operator that is too large.
class CapacityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace tkz
