#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace shapeflow {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorKind {
  InvalidArgument,
  InvertedElement,
  Mesh,
  Solver,
  Io,
  StepFailure,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown by deform() when a triangle would lose positive orientation.
class InvertedElement : public Error {
 public:
  InvertedElement(int triangle, double signed_area)
      : Error(ErrorKind::InvertedElement,
              "triangle " + std::to_string(triangle) +
                  " inverted (signed area " + std::to_string(signed_area) + ")"),
        triangle_(triangle) {}

  int triangle() const noexcept { return triangle_; }

 private:
  int triangle_;
};

class SolverFailure : public Error {
 public:
  SolverFailure(const std::string &what, double residual)
      : Error(ErrorKind::Solver, what + " (relative residual " + format(residual) + ")"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
  }

  double residual_;
};

inline void require(bool condition, const std::string &message,
                    ErrorKind kind = ErrorKind::InvalidArgument) {
  if (!condition) throw Error(kind, message);
}

}  // namespace shapeflow
