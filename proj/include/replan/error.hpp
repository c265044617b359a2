#pragma once

#include <stdexcept>
#include <string>

namespace replan {

// Every failure surfaced by the library carries one of these kinds so
// callers (and tests) can react to the class of problem, not the message.
enum class ErrorKind {
  Syntax,            // malformed input text
  Arity,             // operator input count does not match its type
  DuplicateId,       // repeated pop id in one plan
  Cycle,             // plan graph contains a cycle
  Structure,         // other structural violations (root, reachability, fields)
  MissingProperty,   // graph decoding: required property absent
  DanglingEdge,      // graph decoding: edge to an undescribed resource
  UnknownTable,      // catalog lookup failure
  UnknownIndex,
  Range,             // argument outside its documented domain
  Version,           // knowledge-base version mismatch
  Internal           // invariant violation inside the library
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, int line = 0, int column = 0)
      : std::runtime_error(std::move(message)), kind_(kind), line_(line), column_(column) {}

  ErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  ErrorKind kind_;
  int line_;
  int column_;
};

}  // namespace replan
