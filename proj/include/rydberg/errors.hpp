#pragma once

#include <stdexcept>
#include <string>

namespace rydberg {

// All library failures derive from Error so callers (the CLI in particular)
// can catch one type and still branch on the category when needed.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct UsageError : Error { using Error::Error; };
struct SizeError : Error { using Error::Error; };
struct FitError : Error { using Error::Error; };
struct InsufficientDataError : Error { using Error::Error; };
struct VersionError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };

struct ParseError : Error {
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace rydberg
