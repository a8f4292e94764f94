// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ENZRES_ERROR_HPP
#define ENZRES_ERROR_HPP

#include <stdexcept>
#include <string>

namespace enzres
{

// Bad input: malformed files, violated preconditions, inadmissible parameters.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed on admissible input (singular system, no
// convergence). The CLI maps this to exit code 1.
class SolverError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Raised when a shift or wavenumber sits on (or numerically next to) a
// Dirichlet eigenvalue of the core region.
class NearEigenvalueError : public ValidationError
{
public:
  NearEigenvalueError(const std::string &what, double distance)
    : ValidationError(what), distance_(distance)
  {
  }
  double distance() const { return distance_; }

private:
  double distance_;
};

}  // namespace enzres

#endif  // ENZRES_ERROR_HPP
