#pragma once

#include <stdexcept>
#include <string>

namespace plcg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector/matrix length mismatch.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed or unsupported Matrix Market input.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Operator or preconditioner is not positive definite where required.
class DefinitenessError : public Error {
public:
    using Error::Error;
};

/// Invalid argument (pipeline depth 0, empty shift set, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Zero pivot or non-positive square-root argument in a transform update.
class BreakdownError : public Error {
public:
    using Error::Error;
};

/// Problem size exceeds index range or a diagnostics cap.
class SizeError : public Error {
public:
    using Error::Error;
};

}  // namespace plcg
