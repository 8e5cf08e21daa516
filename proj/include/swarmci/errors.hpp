#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace swarmci {

// Configuration problems abort before any compute resource is touched; the
// CLI maps them to exit code 2. Runtime failures map to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RunError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// -- config --------------------------------------------------------------

class MalformedJson : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class SchemaViolation : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class RangeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class UnknownBackend : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// -- planner ---------------------------------------------------------------

class MatrixTooLarge : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class EmptyMatrix : public RunError {
public:
    using RunError::RunError;
};

// -- backend ---------------------------------------------------------------

class BackendError : public RunError {
public:
    using RunError::RunError;
};

class InsufficientCapacity : public BackendError {
public:
    using BackendError::BackendError;
};

class ProvisionTimeout : public BackendError {
public:
    using BackendError::BackendError;
};

class AuthFailure : public BackendError {
public:
    using BackendError::BackendError;
};

class LaunchFailure : public BackendError {
public:
    using BackendError::BackendError;
};

class TeardownPartial : public BackendError {
public:
    explicit TeardownPartial(std::vector<std::string> unreachable)
        : BackendError(describe(unreachable)), unreachable_(std::move(unreachable)) {}

    const std::vector<std::string>& unreachable_hosts() const { return unreachable_; }

private:
    static std::string describe(const std::vector<std::string>& hosts) {
        std::string msg = "teardown incomplete, unreachable nodes:";
        for (const auto& h : hosts) msg += " " + h;
        return msg;
    }

    std::vector<std::string> unreachable_;
};

// -- executor ----------------------------------------------------------------

class ProvisionFailure : public RunError {
public:
    using RunError::RunError;
};

// -- results ----------------------------------------------------------------

class ParserFailure : public RunError {
public:
    ParserFailure(const std::string& msg, std::string stderr_text)
        : RunError(msg), stderr_(std::move(stderr_text)) {}

    const std::string& parser_stderr() const { return stderr_; }

private:
    std::string stderr_;
};

class ParserOutputMalformed : public RunError {
public:
    using RunError::RunError;
};

class EmptyOutputDir : public RunError {
public:
    using RunError::RunError;
};

class MissingBaseline : public RunError {
public:
    using RunError::RunError;
};

class MissingMetric : public RunError {
public:
    using RunError::RunError;
};

class NonpositiveValue : public RunError {
public:
    using RunError::RunError;
};

class InsufficientHistory : public RunError {
public:
    using RunError::RunError;
};

class IoFailure : public RunError {
public:
    using RunError::RunError;
};

// -- publisher ----------------------------------------------------------------

class PushRejected : public RunError {
public:
    using RunError::RunError;
};

// -- cli ----------------------------------------------------------------

class MissingRequiredVar : public ConfigError {
public:
    explicit MissingRequiredVar(const std::string& var)
        : ConfigError("missing required environment variable: " + var), var_(var) {}

    const std::string& variable() const { return var_; }

private:
    std::string var_;
};

}  // namespace swarmci
