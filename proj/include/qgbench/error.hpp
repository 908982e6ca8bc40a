#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qgbench {

/// Base class for every domain error raised by the library. The CLI maps
/// these to exit code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  /// Stable machine-readable identifier, e.g. "MissingField".
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class MalformedLine : public Error {
 public:
  explicit MalformedLine(std::size_t line_no, const std::string& detail = {})
      : Error("MalformedLine",
              "malformed record on line " + std::to_string(line_no) +
                  (detail.empty() ? "" : ": " + detail)),
        line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class MissingField : public Error {
 public:
  MissingField(std::string field, std::size_t line_no)
      : Error("MissingField", "missing field '" + field + "' on line " +
                                  std::to_string(line_no)),
        field_(std::move(field)),
        line_no_(line_no) {}
  const std::string& field() const noexcept { return field_; }
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::string field_;
  std::size_t line_no_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(std::string id)
      : Error("DuplicateId", "duplicate record id '" + id + "'"), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("EmptyCorpus", "corpus is empty") {}
};

class EmptyInput : public Error {
 public:
  explicit EmptyInput(const std::string& what)
      : Error("EmptyInput", what + ": input is empty") {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error("InvalidArgument", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("IoError", message) {}
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("DimensionMismatch", "embedding dimension mismatch: expected " +
                                       std::to_string(expected) + ", got " +
                                       std::to_string(got)) {}
};

class NoScorablePairs : public Error {
 public:
  NoScorablePairs() : Error("NoScorablePairs", "run has no successful results to score") {}
};

class MissingGold : public Error {
 public:
  explicit MissingGold(const std::string& record_id)
      : Error("MissingGold", "no gold question for record '" + record_id + "'") {}
};

class RaggedMatrix : public Error {
 public:
  explicit RaggedMatrix(const std::string& detail) : Error("RaggedMatrix", detail) {}
};

class TooFewRaters : public Error {
 public:
  explicit TooFewRaters(std::size_t n)
      : Error("TooFewRaters", "fleiss kappa needs at least 2 raters, got " +
                                  std::to_string(n)) {}
};

}  // namespace qgbench
