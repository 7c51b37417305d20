#pragma once

#include <stdexcept>
#include <string>

namespace sourcesink {

// Error taxonomy mirrors the CLI exit codes: input 1, numerical 2, I/O 3.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sourcesink
