#pragma once

// Property suites behind `dafc verify`. Each suite draws its random cases from
// the given seed and reports one result per property.

#include <cstdint>
#include <string>
#include <vector>

namespace dafc::verify {

struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SuiteResult {
    std::string suite;
    std::uint64_t seed = 0;
    std::vector<PropertyResult> properties;

    bool passed() const;
};

const std::vector<std::string>& suite_names();

/// Throws std::invalid_argument for an unknown suite name.
SuiteResult run_suite(const std::string& name, std::uint64_t seed);

} // namespace dafc::verify
