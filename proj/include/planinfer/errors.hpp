#pragma once

#include <stdexcept>
#include <string>

namespace planinfer {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyPlan : public Error {
 public:
  EmptyPlan() : Error("plan has no placed predicate") {}
};

class EmptySession : public Error {
 public:
  EmptySession() : Error("session has no utterances") {}
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class UniverseMismatch : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

// Malformed JSON documents (session, plan, truth, summary).
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace planinfer
