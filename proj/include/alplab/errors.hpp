#pragma once

#include <stdexcept>
#include <string>

namespace alplab {

// Bad configuration or malformed domain data (unknown names, illegal scenes).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Persisted data that parses but violates an invariant (version mismatch,
// feasibility flag disagreeing with classify, overlapping splits).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse: stepping a finished episode, asking the expert for an
// infeasible goal, mutating a learner in eval mode.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A runtime invariant broke during an experiment.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace alplab
