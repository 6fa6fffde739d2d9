#pragma once

#include <stdexcept>
#include <string>

namespace wtank {

// Process exit codes shared by the CLI and the report runner.
enum class ExitCode : int { ok = 0, failed = 1, config = 2, regime = 3, numerical = 4 };

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

// Bad input: malformed configuration, mismatched grids, invalid arguments.
struct UsageError : Error {
    explicit UsageError(const std::string& w) : Error(ExitCode::config, w) {}
};

// Argument outside the region where a formula is defined (x not in [0,L], gamma*L/2 >= 1, ...).
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ExitCode::regime, w) {}
};

// Parameters outside the regime in which the construction is valid.
struct RegimeError : Error {
    explicit RegimeError(const std::string& w) : Error(ExitCode::regime, w) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(ExitCode::numerical, w) {}
};

}  // namespace wtank
