#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace demix {

/// Operand shapes do not agree (vector length, matrix rows/cols, latent dim).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A network or problem is internally inconsistent (layer chaining, merge
/// compatibility, mismatched ground truth).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed interchange input. `path` names the offending field, e.g.
/// `layers[2].weights.data`.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class UnsupportedVersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// A construction would exceed a configured size cap. `required` is the size
/// the caller would need to allow.
class CapacityError : public std::runtime_error {
 public:
  CapacityError(const std::string& what, std::size_t required)
      : std::runtime_error(what), required_(required) {}
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t required_;
};

/// Every restart of a solve produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace demix
