// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ENZRES_EIGENSOLVER_HPP
#define ENZRES_EIGENSOLVER_HPP

#include "enzres/fem.hpp"
#include "enzres/perturbation.hpp"

namespace enzres
{

struct OperatorPair
{
  SparseMatrix<Complex> K;  // ∫ (1/ε_δ) ∇u·∇v with ε_δ = 1 in D, δ in the shell
  SparseMatrix<double> M;
};

OperatorPair AssembleOperator(const CoreShell &cs, Complex delta);

struct ResonancePair
{
  Complex delta;
  Complex lambda;
  ComplexField u;  // normalized so that ∫ u u0 = |Ω∖D̄| + ∫ψ_d² (no conjugation)
  int iterations = 0;
  double residual = 0.0;    // ‖(K − λM)u‖ / ‖u‖
  double separation = 0.0;  // distance to the next-nearest eigenvalue
};

struct ResonanceOptions
{
  double tol = 1e-9;
  int max_iterations = 200;
};

// Eigenpair of K(δ)u = λMu nearest to lambda_guess, by shift-invert inverse
// iteration followed by Rayleigh quotient iteration.
ResonancePair ResonanceNear(const CoreShell &cs, Complex delta, double lambda_guess,
                            const RealVector &psi_d, const ResonanceOptions &opts = {});

}  // namespace enzres

#endif  // ENZRES_EIGENSOLVER_HPP
