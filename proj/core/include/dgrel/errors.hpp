#pragma once

#include <stdexcept>
#include <string>

namespace dgrel {

/// Malformed or inconsistent network description.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nodal system could not be solved (island without a source, singular matrix).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario execution failed; `time_s` is the simulation time of the failure.
class EngineError : public std::runtime_error {
 public:
  EngineError(const std::string& what, double time_s)
      : std::runtime_error(what + " (t=" + std::to_string(time_s) + " s)"), time_s_(time_s) {}
  [[nodiscard]] double time_s() const noexcept { return time_s_; }

 private:
  double time_s_;
};

/// Request rejected on domain grounds, e.g. a DG area that fails back-feed screening.
class DomainRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dgrel
