#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "protocell/solver.hpp"
#include "protocell/verify.hpp"

namespace protocell {

struct SweepSpec {
    std::vector<double> k1{1, 10, 100, 1000, 10000};
    std::vector<double> k2{0.1, 1, 10, 100, 1000};
    std::vector<double> q_ccm{250, 350, 450};
};

struct RunConfig {
    ModelConfig model;
    SweepSpec sweep;
    StudySpec study;
};

/// Flat `key = value` text, one entry per line, `#` starts a comment. Lists
/// are comma separated. Unknown keys and malformed values raise ConfigError
/// with the line number and key.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text of every key, in a fixed order, with round-trip numbers.
/// parse_config(config_to_text(c)) reproduces c.
std::string config_to_text(const RunConfig& config);
std::string config_to_text(const ModelConfig& config);

/// Every accepted key, in canonical order.
std::vector<std::string> config_keys();

}  // namespace protocell
