#pragma once

#include <stdexcept>
#include <string>

namespace pfr {

// Base of every error thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration, schema, or call parameters. CLI exit code 1.
class ConfigError : public Error {
public:
  using Error::Error;
};

class SchemaError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class UnsupportedTargetError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

// Unseen category at transform time under strict mode.
class ValidationError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class ParameterError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

// Runtime data problems. CLI exit code 2.
class DegenerateLabelsError : public Error {
public:
  using Error::Error;
};

class DegenerateGroupError : public Error {
public:
  using Error::Error;
};

class ColumnMismatchError : public Error {
public:
  using Error::Error;
};

class EmptyModelError : public Error {
public:
  using Error::Error;
};

class NumericInputError : public Error {
public:
  using Error::Error;
};

}  // namespace pfr
