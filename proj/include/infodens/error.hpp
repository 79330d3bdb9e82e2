#pragma once

#include <stdexcept>
#include <string>

namespace infodens {

// Base of every error the toolkit throws. kind() is a stable short tag used
// by the command line front end for machine-parseable error lines.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error("parse", "line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message) : Error("validation", message) {}
};

class DuplicateError : public Error {
 public:
  explicit DuplicateError(const std::string& message) : Error("duplicate", message) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& message) : Error("domain", message) {}
};

class AlignmentError : public Error {
 public:
  AlignmentError(const std::string& doc_id, std::size_t index);
  const std::string& doc_id() const noexcept { return doc_id_; }
  std::size_t index() const noexcept { return index_; }

 private:
  std::string doc_id_;
  std::size_t index_;
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& message) : Error("training", message) {}
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& message) : Error("contract", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message) : Error("usage", message) {}
};

}  // namespace infodens
