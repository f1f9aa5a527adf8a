#pragma once

#include <stdexcept>
#include <string>

namespace hgs {

// Malformed or invariant-violating instance data. The message names the
// offending field (JSON path or line) or the violated rule.
class InstanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition (infeasible action, query on a
// terminal state, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The simulator has unscheduled operations but no future event. Unreachable
// for valid instances; surfaced instead of looping forever.
class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape mismatch in the numeric kernel.
class ShapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Configuration file or flag problem; message carries the field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite gradient; the message names the parameter.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hgs
