#pragma once

#include <stdexcept>
#include <string>

namespace deepteam {

// Malformed input: wrong shapes, bad influence vector, unparsable model file.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure at a specific stage (1-based time index).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& module, int t, const std::string& what)
      : std::runtime_error(module + ": " + what + " at t=" + std::to_string(t)),
        module_(module),
        t_(t) {}

  const std::string& module() const { return module_; }
  int t() const { return t_; }

 private:
  std::string module_;
  int t_;
};

class RiccatiFailure : public NumericalError {
 public:
  explicit RiccatiFailure(int t)
      : NumericalError("riccati", t, "inner matrix B'PB+R not positive definite") {}
};

class SingularInnovation : public NumericalError {
 public:
  SingularInnovation(const std::string& filter, int t)
      : NumericalError(filter, t, "innovation covariance is singular") {}
};

}  // namespace deepteam
