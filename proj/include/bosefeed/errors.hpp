#pragma once

#include <stdexcept>
#include <string>

namespace bosefeed {

// Invalid or inconsistent configuration / preconditions.  CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical check failed: under-resolved quadrature, trace drift,
// truncation leakage.  CLI exit code 3.
struct ToleranceError : std::runtime_error {
    explicit ToleranceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Declared resource limits: Fock-sector dimension cap, composition depth.
// CLI exit code 4.
struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bosefeed
