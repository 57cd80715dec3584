// Copyright the sgrec authors. Licensed under the terms of the Apache 2.0 license.
// See LICENSE in the project root.
#pragma once

#include <stdexcept>
#include <string>

namespace sgrec {

// Usage / configuration problems. Mapped to exit code 2 by the CLI.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Everything below maps to exit code 1.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyDatasetError : std::runtime_error {
  explicit EmptyDatasetError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when an operation would exceed a configured memory budget.
struct ResourceError : std::runtime_error {
  explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct LoadError : std::runtime_error {
  explicit LoadError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sgrec
