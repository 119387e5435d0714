#pragma once

#include <stdexcept>
#include <string>

namespace socialarm {

/// Scenario or configuration content is invalid. The message names the
/// offending field using a JSON-path-like location, e.g. `agents[2].id`.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A file could not be opened, read, or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace socialarm
