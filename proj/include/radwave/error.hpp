#pragma once

#include <stdexcept>
#include <string>

namespace radwave {

/// Bad input: violated preconditions, unknown keys, inconsistent shapes.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string module, const std::string& what)
        : std::invalid_argument(module + ": " + what), module_(std::move(module)) {}
    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// Numerical failure during an otherwise valid computation.
class ComputationError : public std::runtime_error {
public:
    ComputationError(std::string module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(std::move(module)) {}
    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

} // namespace radwave
