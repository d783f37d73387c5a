#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace trajex {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied malformed or inconsistent input.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Point configuration too degenerate to estimate a pose or box.
class DegenerateGeometryError : public Error {
 public:
  explicit DegenerateGeometryError(const std::string &what, int frame_index = -1)
      : Error(what), frame_index_(frame_index) {}
  int frame_index() const { return frame_index_; }

 private:
  int frame_index_;
};

/// Clip rejected because its best detection is below the confidence floor.
class LowConfidenceError : public Error {
 public:
  LowConfidenceError(const std::string &what, double confidence)
      : Error(what), confidence_(confidence) {}
  double confidence() const { return confidence_; }

 private:
  double confidence_;
};

/// File could not be parsed. Offset is in bytes from the start of the file,
/// line is 1-based and zero when unknown.
class ParseError : public Error {
 public:
  ParseError(std::string path, std::uint64_t offset, const std::string &what,
             std::uint64_t line = 0)
      : Error(path + ": " + what + " (byte " + std::to_string(offset) +
              (line ? ", line " + std::to_string(line) : std::string()) + ")"),
        path_(std::move(path)),
        offset_(offset),
        line_(line) {}
  const std::string &path() const { return path_; }
  std::uint64_t offset() const { return offset_; }
  std::uint64_t line() const { return line_; }

 private:
  std::string path_;
  std::uint64_t offset_;
  std::uint64_t line_;
};

/// Token id outside the reserved trajectory range.
class DecodeError : public Error {
 public:
  DecodeError(const std::string &what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

}  // namespace trajex
