#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dafc {

/// Non-finite value reached a filter, regressor or estimator. Carries the
/// loop step at which it happened when known.
class NumericFault : public std::runtime_error {
public:
    explicit NumericFault(const std::string& what, std::optional<std::int64_t> step = std::nullopt)
        : std::runtime_error(step ? what + " (step " + std::to_string(*step) + ")" : what), step_(step) {}

    std::optional<std::int64_t> step() const noexcept { return step_; }

private:
    std::optional<std::int64_t> step_;
};

class FrequencyRangeError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class SpecValidationError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class DimensionError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class InsufficientDataError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class WindowingError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class SingularityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every violated constraint of an experiment configuration, not just the first.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "invalid configuration:";
        for (const auto& s : v) out += "\n  - " + s;
        return out;
    }

    std::vector<std::string> violations_;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line) : std::runtime_error(format(what, line)), line_(line) {}
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& what, int line) {
        return line >= 0 ? "line " + std::to_string(line + 1) + ": " + what : what;
    }
    int line_;
};

} // namespace dafc
