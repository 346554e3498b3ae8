#pragma once

#include <stdexcept>
#include <string>

namespace edgesim {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, tables or scenario values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class TimeRegressionError : public Error {
 public:
  using Error::Error;
};

// A value was read before it had any data behind it.
class NotReadyError : public Error {
 public:
  using Error::Error;
};

class RegistrationError : public Error {
 public:
  using Error::Error;
};

// Work handed to a node that cannot take it. Always a caller bug.
class AssignmentError : public Error {
 public:
  using Error::Error;
};

// No healthy, reachable node is left to take a task.
class AssignmentUnavailable : public Error {
 public:
  using Error::Error;
};

// A weighting was requested over an empty candidate set.
class EmptyCandidates : public AssignmentUnavailable {
 public:
  using AssignmentUnavailable::AssignmentUnavailable;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string label)
      : Error(what), label_(std::move(label)) {}

  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

}  // namespace edgesim
