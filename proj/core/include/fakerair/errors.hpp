#pragma once

#include <stdexcept>
#include <string>

namespace fakerair {

// Error categories map onto the CLI exit codes:
//   UsageError -> 1, ConfigError/DataError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad invocation: missing flags, wrong subcommand combinations, contract misuse.
class UsageError : public Error {
public:
    using Error::Error;
};

// Invalid or inconsistent configuration values (config file or overrides).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed files, missing data, mismatched hashes.
class DataError : public Error {
public:
    using Error::Error;
};

// Non-finite values, diverged rollouts, aborted optimization.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace fakerair
