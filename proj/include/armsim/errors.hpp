#ifndef ARMSIM_ERRORS_HPP
#define ARMSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace armsim {

/// Invalid or inconsistent run configuration (bad key, missing file reference,
/// violated precondition detected before time marching starts).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical blow-up during time integration (NaN/Inf in a stage, or a
/// property evaluation leaving its physical range mid-run).
class DivergedError : public std::runtime_error {
public:
    explicit DivergedError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem failure: unreadable input, unwritable output directory.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace armsim

#endif
