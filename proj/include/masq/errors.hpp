#pragma once

#include <stdexcept>
#include <string>

namespace masq {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes:
// config-class errors exit 1, anything else exits 2.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor / mask dimension mismatch.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Non-finite or otherwise unusable numeric input.
struct InvalidValue : Error {
    explicit InvalidValue(const std::string& msg) : Error(msg) {}
};

// Bad configuration: file schema violations, unsupported precision mixes.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Index outside its declared domain (e.g. timestep past the schedule end).
struct RangeError : Error {
    explicit RangeError(const std::string& msg) : Error(msg) {}
};

} // namespace masq
