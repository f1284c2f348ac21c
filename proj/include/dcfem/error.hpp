// Copyright The dcfem Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace dcfem {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

namespace detail {
inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}
} // namespace detail

/// Malformed input file. Carries the 1-based line number of the offending line.
class ParseError : public Error {
public:
  ParseError(const std::string &what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Invalid mesh geometry or topology (inverted or degenerate elements, non-manifold edges).
class MeshError : public Error {
public:
  using Error::Error;
};

/// Iterative method failed to reach its tolerance.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string &what, int iterations, double residual)
      : Error(what + " (iterations " + std::to_string(iterations) + ", residual " + detail::sci(residual) +
              ")"),
        iterations_(iterations), residual_(residual) {}
  [[nodiscard]] int iterations() const noexcept { return iterations_; }
  [[nodiscard]] double residual() const noexcept { return residual_; }

private:
  int iterations_;
  double residual_;
};

/// Singular or rank-deficient dense system.
class SingularMatrix : public Error {
public:
  using Error::Error;
};

/// A method was called on data that violates its stated assumptions.
class PreconditionViolation : public Error {
public:
  using Error::Error;
};

/// Field with vanishing gradient where the quantity requires |grad u| > 0.
class DegenerateField : public Error {
public:
  using Error::Error;
};

} // namespace dcfem
