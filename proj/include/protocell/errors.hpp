#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace protocell {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An input value violates a documented precondition. `field()` names the
/// offending parameter.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Argument outside the validity window of a correlation.
class RangeError : public Error {
public:
    using Error::Error;
};

/// A mesh would exceed the configured cell budget.
class ResourceError : public Error {
public:
    ResourceError(std::size_t required, std::size_t budget)
        : Error("mesh needs " + std::to_string(required) + " cells, budget is " +
                std::to_string(budget)),
          required_(required), budget_(budget) {}

    std::size_t required() const noexcept { return required_; }
    std::size_t budget() const noexcept { return budget_; }

private:
    std::size_t required_;
    std::size_t budget_;
};

/// Iterative solve failed (stalled, diverged or ran out of iterations).
/// Carries the residual history observed up to the failure.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}

    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// Malformed configuration file or value.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0, std::string key = {})
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line), key_(std::move(key)) {}

    int line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    int line_;
    std::string key_;
};

}  // namespace protocell
