#pragma once

#include <stdexcept>
#include <string>

namespace rtk {

// Base of every error raised by the toolkit. The CLI maps these to exit code 1
// (user error); anything else escaping is treated as an internal failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

class UnsupportedFormatError : public Error {
public:
    using Error::Error;
};

class DimensionMismatchError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

class InfeasibleError : public Error {
public:
    using Error::Error;
};

class IncompleteDataError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class StateError : public Error {
public:
    using Error::Error;
};

class LayoutError : public Error {
public:
    using Error::Error;
};

class DivergedError : public Error {
public:
    using Error::Error;
};

class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Annotation service errors carry an HTTP-like class.
class NotFoundError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConflictError : public Error {
public:
    using Error::Error;
};

}  // namespace rtk
