#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace lector {

// Base for every error this library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration, malformed input file, unknown scheduler name.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite value reached a bounded domain; an upstream computation is broken.
class NumericError : public Error {
public:
    using Error::Error;
};

// A reply contained no decimal number.
class ParseError : public Error {
public:
    using Error::Error;
};

// A reply contained a decimal outside [0,1].
class OutOfRangeError : public Error {
public:
    OutOfRangeError(const std::string& what, double value) : Error(what), value_(value) {}
    double value() const noexcept { return value_; }

private:
    double value_;
};

// Provider could not produce a score for the pair after all retries.
class SimilarityUnavailable : public Error {
public:
    SimilarityUnavailable(std::string a, std::string b, const std::string& reason)
        : Error("similarity unavailable for (" + a + ", " + b + "): " + reason),
          first_(std::move(a)),
          second_(std::move(b)) {}

    const std::string& first() const noexcept { return first_; }
    const std::string& second() const noexcept { return second_; }

private:
    std::string first_;
    std::string second_;
};

// A metric was requested over an empty event log.
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

// A scheduler was driven with arguments outside its contract.
class SchedulerError : public Error {
public:
    using Error::Error;
};

// Value iteration did not meet its tolerance within the sweep budget.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace lector
