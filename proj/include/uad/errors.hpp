#pragma once

#include <stdexcept>
#include <string>

namespace uad {

// Invalid argument shapes (matrix/vector dimension mismatches).
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Bad configuration: unknown keys, out-of-range hyperparameters.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data: unreadable files, malformed CSV, empty datasets.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Data that cannot be trained on (e.g. a zero-variance coordinate).
class DegenerateDataError : public DataError {
public:
    using DataError::DataError;
};

// Structured-file parse failure; the message names the offending section.
class ParseError : public DataError {
public:
    using DataError::DataError;
};

// Persisted file claims a format version newer than this build supports.
class UnsupportedVersionError : public ParseError {
public:
    using ParseError::ParseError;
};

// Non-finite parameters encountered during training.
class TrainingDivergedError : public std::runtime_error {
public:
    TrainingDivergedError(const std::string& what, int iteration)
        : std::runtime_error(what), iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

}  // namespace uad
