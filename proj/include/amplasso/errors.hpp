#pragma once

#include <stdexcept>
#include <string>

namespace amplasso {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user-facing configuration (bad prior string, out-of-range parameter).
class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class RangeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Requested order statistic does not exist (rank larger than the vector).
class RankError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// The calibration parameter lies below the point where lambda crosses zero.
class NegativeLambda : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Numerical failure of an iterative solver.
class SolverError : public Error {
public:
    using Error::Error;
};

class NonConvergence : public SolverError {
public:
    using SolverError::SolverError;
};

class BracketFailure : public SolverError {
public:
    using SolverError::SolverError;
};

class Divergence : public SolverError {
public:
    using SolverError::SolverError;
};

} // namespace amplasso
