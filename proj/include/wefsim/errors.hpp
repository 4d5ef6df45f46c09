#pragma once

#include <stdexcept>
#include <string>

namespace wefsim {

// Violated call contract: bad dimensions, empty inputs, invalid parameters.
struct precondition_error : std::invalid_argument {
    explicit precondition_error(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed CSV or config file; the message carries file and line number.
struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

// Local training produced a non-finite loss.
struct training_diverged : std::runtime_error {
    explicit training_diverged(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wefsim
