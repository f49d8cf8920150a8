#pragma once

#include <stdexcept>
#include <string>

namespace factdetect {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data: malformed JSONL, unknown labels, failed joins.
class DataError : public Error {
public:
    using Error::Error;
};

// Invalid configuration or arguments; maps to exit code 2 in the CLI.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A backend (LLM or embedding) could not produce a response. Aborts a run.
class BackendError : public Error {
public:
    using Error::Error;
};

class TransportError : public BackendError {
public:
    TransportError(const std::string& what, int status)
        : BackendError(what), status_(status) {}

    // HTTP status, or 0 when the request never got a response.
    int status() const noexcept { return status_; }

private:
    int status_;
};

class FixtureMiss : public BackendError {
public:
    using BackendError::BackendError;
};

}  // namespace factdetect
