#pragma once

#include <stdexcept>
#include <string>

namespace dscnn {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor/layer dimension problems.
class ShapeError : public Error {
public:
  using Error::Error;
};

// File format, manifest, or dataset consistency problems.
class DataError : public Error {
public:
  using Error::Error;
};

// Invalid user-supplied configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Training-time failures (divergence, all restarts failed, ...).
class TrainError : public Error {
public:
  using Error::Error;
};

// A gradient contained NaN/Inf; carries the parameter name in what().
class NonFiniteGradient : public TrainError {
public:
  using TrainError::TrainError;
};

}  // namespace dscnn
