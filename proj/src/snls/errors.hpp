#pragma once

#include <stdexcept>
#include <string>

namespace snls {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Grid or coefficient array does not match the basis it is used with.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or violated precondition on model parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Raised by the integrators when the state leaves the admissible region.
class BlowUpError : public Error {
 public:
  BlowUpError(double t, double v_norm)
      : Error("blow-up guard tripped at t=" + std::to_string(t) +
              " (|u|_V=" + std::to_string(v_norm) + ")"),
        time(t),
        v_norm(v_norm) {}

  double time;
  double v_norm;
};

}  // namespace snls
