#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace abf {

/** Base class for all library errors. */
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/** A documented precondition was violated by the caller. */
class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& msg) : Error(msg) {}
};

/** Conditioning on a reaction coordinate whose marginal mass is below the floor. */
class DegenerateConditional : public ContractViolation {
public:
    explicit DegenerateConditional(const std::string& msg) : ContractViolation(msg) {}
};

/** Invalid or inconsistent experiment configuration. */
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/** A solver broke down (loss of positivity, linear-algebra breakdown). */
class SolverFailure : public Error {
public:
    explicit SolverFailure(const std::string& msg) : Error(msg) {}
};

/** An iteration hit its budget before reaching tolerance; carries the residual history. */
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& msg, std::vector<double> history)
        : Error(msg), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

/** Filesystem or serialization failure. */
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace abf
