#pragma once

#include <stdexcept>
#include <string>

namespace vidal {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad parameters, schema violations, invalid boxes.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Operation not allowed in the current loop state (stopped, not pending, ...).
class StateError : public Error {
public:
    using Error::Error;
};

/// A mutation collides with what is already recorded (e.g. a frame annotated twice).
class ConflictError : public StateError {
public:
    using StateError::StateError;
};

/// Failure talking to an external detector (file, process, endpoint).
class AdapterError : public Error {
public:
    using Error::Error;
};

} // namespace vidal
