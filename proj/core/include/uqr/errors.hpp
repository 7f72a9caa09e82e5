#pragma once

#include <stdexcept>
#include <string>

namespace uqr {

// User/configuration mistakes: bad config values, malformed files, shape
// mismatches caused by inputs. The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal invariant violations. The CLI maps these to exit code 3.
class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace uqr
