#pragma once

#include <stdexcept>
#include <string>

namespace ssp {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text (bad line structure, bad JSON, ...). Carries a
/// 1-based line number when one is known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Structurally valid input that violates a domain invariant
/// (unknown label, duplicate id, length mismatch, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Bad or missing configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Network failure or non-success HTTP status after retries are exhausted.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& what, int status = 0)
        : Error(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

/// The remote endpoint answered, but not in the expected schema.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// No feasible exemplar subset exists, even after the relaxation ladder.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// An LLM response from which no label could be extracted.
class UnparseableResponseError : public Error {
public:
    using Error::Error;
};

}  // namespace ssp
