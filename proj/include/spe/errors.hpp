#pragma once

#include <stdexcept>
#include <string>

namespace spe {

// Invalid or inconsistent user configuration. CLI exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or unusable input data (files, tables). CLI exit code 3.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Problem exceeds the built-in dense-simulation limits. CLI exit code 4.
struct capacity_error : std::runtime_error {
    explicit capacity_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace spe
