#pragma once

#include <stdexcept>
#include <string>

namespace covertlqr {

/// Broad failure classes. The command-line front end maps each one to an
/// exit code, so keep the set small.
enum class ErrorKind {
  kConfig,      // malformed or invalid user input
  kInfeasible,  // optimization problem has no feasible point
  kSolver,      // numerical method failed to converge or to certify
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error ConfigError(const std::string& what) {
  return Error(ErrorKind::kConfig, what);
}
inline Error InfeasibleError(const std::string& what) {
  return Error(ErrorKind::kInfeasible, what);
}
inline Error SolverError(const std::string& what) {
  return Error(ErrorKind::kSolver, what);
}

}  // namespace covertlqr
