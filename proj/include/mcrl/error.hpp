#pragma once

#include <stdexcept>
#include <string>

namespace mcrl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation that is not available in the current belief state.
class InvalidComputation : public Error {
 public:
  using Error::Error;
};

// Malformed JSON / CSV / manifest content.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A participant record whose replay is inconsistent. Carries the failing
// trial and step so validators can report them.
class CorruptRecord : public Error {
 public:
  CorruptRecord(int trial, int step, const std::string& what)
      : Error("trial " + std::to_string(trial) + " step " + std::to_string(step) + ": " + what),
        trial_(trial),
        step_(step) {}
  int trial() const { return trial_; }
  int step() const { return step_; }

 private:
  int trial_;
  int step_;
};

}  // namespace mcrl
