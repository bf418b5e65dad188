#pragma once

#include <stdexcept>
#include <string>

namespace gmmsgd {

/// Base error; the message is prefixed with the module that raised it.
class Error : public std::runtime_error {
 public:
  Error(const std::string& module, const std::string& message)
      : std::runtime_error("[" + module + "] " + message), module_(module) {}
  const std::string& module() const { return module_; }

 private:
  std::string module_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A trajectory produced NaN/inf or overflowed.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& module, const std::string& message,
                 double t, long index)
      : Error(module, message + " (t=" + std::to_string(t) +
                          ", index=" + std::to_string(index) + ")"),
        t_(t),
        index_(index) {}
  double time() const { return t_; }
  long index() const { return index_; }

 private:
  double t_;
  long index_;
};

}  // namespace gmmsgd
