#pragma once

#include <stdexcept>
#include <string>

namespace betamix {

// Malformed model/prior/sampler configuration, including formula syntax.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset problems: unreadable files, out-of-range responses, ragged rows.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runtime failures inside an MCMC run (non-finite targets, degenerate blocks).
class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace betamix
