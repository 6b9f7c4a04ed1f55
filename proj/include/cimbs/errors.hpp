#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cimbs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

/// A point outside the domain of an activation or cost function.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedModelError : public Error {
 public:
  using Error::Error;
};

/// An exhaustive oracle was asked to enumerate beyond its hard bound.
class EnumerationLimitError : public Error {
 public:
  using Error::Error;
};

/// A requested sample count exceeds the configured hard cap.
class ResourceError : public Error {
 public:
  ResourceError(std::uint64_t required, std::uint64_t cap)
      : Error("required " + std::to_string(required) + " RR sets exceeds cap " +
              std::to_string(cap)),
        required_(required),
        cap_(cap) {}
  std::uint64_t required() const { return required_; }
  std::uint64_t cap() const { return cap_; }

 private:
  std::uint64_t required_;
  std::uint64_t cap_;
};

}  // namespace cimbs
