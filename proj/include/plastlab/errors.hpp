#pragma once

#include <stdexcept>
#include <string>

namespace plastlab {

/// Invalid experiment or module configuration (bad widths, out-of-range knobs).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Tensor dimension mismatch.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed caller-supplied data (e.g. a target row that is not one-hot).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed file contents; carries the byte offset where parsing failed.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t byte_offset)
        : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

/// A run produced a non-finite value; carries the task where it happened.
struct NumericError : std::runtime_error {
    NumericError(const std::string& what, std::size_t task_index)
        : std::runtime_error(what + " (task " + std::to_string(task_index) + ")"),
          task(task_index) {}
    std::size_t task;
};

} // namespace plastlab
