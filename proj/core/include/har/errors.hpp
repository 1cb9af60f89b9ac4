#pragma once

#include <stdexcept>
#include <string>

namespace har {

// Invalid configuration, malformed input files, or violated preconditions.
// The CLI maps this to exit code 1; any other failure maps to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace har
