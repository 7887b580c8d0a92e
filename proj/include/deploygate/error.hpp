#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deploygate {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A dataset, model artifact or space description does not match its schema.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::ptrdiff_t record = -1, std::string field = {})
      : Error(what), record_(record), field_(std::move(field)) {}

  /// Index of the offending record, -1 for header-level problems.
  std::ptrdiff_t record() const noexcept { return record_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::ptrdiff_t record_;
  std::string field_;
};

/// Two datasets (or a dataset and a space) refer to different parameter spaces.
class SpaceMismatch : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a result (singular system, unidentifiable estimate).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace deploygate
