// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include "enzres/eigensolver.hpp"

#include <cmath>
#include <sstream>

#include "enzres/error.hpp"

namespace enzres
{

namespace
{

using ComplexLU = Eigen::SparseLU<SparseMatrix<Complex>>;

bool Factorize(ComplexLU &lu, const OperatorPair &op, Complex sigma)
{
  SparseMatrix<Complex> A = op.K - sigma * op.M.cast<Complex>();
  A.makeCompressed();
  lu.analyzePattern(A);
  lu.factorize(A);
  return lu.info() == Eigen::Success;
}

// Unconjugated bilinear form xᵀ A y.
Complex Dot(const ComplexVector &x, const ComplexVector &y)
{
  return (x.array() * y.array()).sum();
}

}  // namespace

OperatorPair AssembleOperator(const CoreShell &cs, Complex delta)
{
  if (delta == Complex(0.0))
  {
    throw ValidationError("assemble_operator: delta = 0 is singular; use the perturbation "
                          "module at delta = 0");
  }
  OperatorPair op;
  op.K = AssembleStiffness<Complex>(
    *cs.omega, {{kCoreRegion, Complex(1.0)}, {kShellRegion, Complex(1.0) / delta}});
  op.M = AssembleMass(*cs.omega);
  return op;
}

ResonancePair ResonanceNear(const CoreShell &cs, Complex delta, double lambda_guess,
                            const RealVector &psi_d, const ResonanceOptions &opts)
{
  const OperatorPair op = AssembleOperator(cs, delta);
  const SparseMatrix<Complex> M = op.M.cast<Complex>();
  const ComplexVector u0 = BaseField(cs, psi_d).cast<Complex>();

  ComplexLU lu;
  Complex sigma = lambda_guess;
  if (!Factorize(lu, op, sigma))
  {
    sigma *= 1.0 + 1e-4;
    if (!Factorize(lu, op, sigma))
    {
      throw SolverError("resonance_near: shifted operator is singular at the guess");
    }
  }

  auto residual_of = [&](const ComplexVector &x, Complex lam) {
    return (op.K * x - lam * (M * x)).norm() / x.norm();
  };

  ComplexVector x = u0 / u0.norm();
  Complex lam = Dot(x, op.K * x) / Dot(x, M * x);
  double res = residual_of(x, lam);
  int it = 0;
  bool rayleigh = false;
  while (res > opts.tol)
  {
    if (++it > opts.max_iterations)
    {
      std::ostringstream msg;
      msg << "resonance_near: no convergence after " << opts.max_iterations
          << " iterations (residual " << res << ")";
      throw SolverError(msg.str());
    }
    // Switch from the fixed shift to Rayleigh-quotient shifts once the
    // iterate is close to an eigenvector.
    if (rayleigh || res < 1e-3 * std::max(1.0, std::abs(lam)))
    {
      rayleigh = true;
      if (Factorize(lu, op, lam))
      {
        sigma = lam;
      }
    }
    ComplexVector y = lu.solve(M * x);
    if (!y.allFinite())
    {
      throw SolverError("resonance_near: solve produced non-finite values");
    }
    x = y / y.norm();
    lam = Dot(x, op.K * x) / Dot(x, M * x);
    res = residual_of(x, lam);
  }

  // Next-nearest eigenvalue by inverse iteration deflated against x in the
  // M-bilinear form.
  double separation = std::numeric_limits<double>::infinity();
  if (x.size() > 1)
  {
    ComplexLU lu2;
    Complex shift = lam * (1.0 + 1e-6);
    if (Factorize(lu2, op, shift))
    {
      const ComplexVector Mx = M * x;
      const Complex xMx = Dot(x, Mx);
      ComplexVector z = RealVector::Ones(x.size()).cast<Complex>();
      for (Eigen::Index i = 0; i < z.size(); i++)
      {
        z[i] = std::cos(0.37 * static_cast<double>(i));
      }
      Complex mu = 0.0;
      for (int k = 0; k < 40; k++)
      {
        z -= x * (Dot(Mx, z) / xMx);
        ComplexVector w = lu2.solve(M * z);
        w -= x * (Dot(Mx, w) / xMx);
        z = w / w.norm();
        mu = Dot(z, op.K * z) / Dot(z, M * z);
      }
      separation = std::abs(mu - lam);
    }
  }

  const double target = cs.shell_area + psi_d.dot(AssembleMass(*cs.core) * psi_d);
  x *= target / Dot(x, M * u0);

  ResonancePair out;
  out.delta = delta;
  out.lambda = lam;
  out.u = {cs.omega, x};
  out.iterations = it;
  out.residual = residual_of(x, lam);
  out.separation = separation;
  return out;
}

}  // namespace enzres
