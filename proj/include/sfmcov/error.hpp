#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sfmcov {

enum class ErrorKind {
    io,           // unreadable or unwritable files
    parse,        // malformed input files
    invariant,    // reconstruction invariant violations, bad arguments
    degenerate,   // numerically degenerate scenes (rank loss, behind-camera, ...)
    dimension,    // mismatched shapes between arguments
    size_guard,   // dense computation requested above its parameter limit
};

// All library errors carry the pipeline stage that failed so callers can
// report "stage: message" without unwinding context themselves.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string stage, const std::string& message)
        : std::runtime_error(stage + ": " + message),
          kind_(kind),
          stage_(std::move(stage)) {}

    ErrorKind kind() const { return kind_; }
    const std::string& stage() const { return stage_; }

private:
    ErrorKind kind_;
    std::string stage_;
};

}  // namespace sfmcov
