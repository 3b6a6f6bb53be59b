#pragma once

#include <stdexcept>
#include <string>

namespace pcsim {

// Input outside the mathematical domain of an operation (length mismatch,
// probability outside [0,1], parameter ranges).
using domain_error = std::domain_error;

// The request is well-defined but beyond what the implementation supports,
// e.g. exact enumeration for n larger than the supported cap.
class capability_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A lemma's hypothesis does not hold for the supplied instance.
class precondition_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An internal invariant was observed broken.
class inconsistency_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pcsim
