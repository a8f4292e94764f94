// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include "enzres/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "enzres/error.hpp"

namespace enzres
{

CoreShell::CoreShell(std::shared_ptr<const Mesh> m) : mesh(std::move(m))
{
  if (!mesh->HasRegion(kCoreRegion) || !mesh->HasRegion(kShellRegion))
  {
    throw ValidationError("mesh must contain a core (region 0) and a shell (region 1)");
  }
  core = std::make_shared<DofMap>(mesh, std::set<int>{kCoreRegion});
  shell = std::make_shared<DofMap>(mesh, std::set<int>{kShellRegion});
  omega = std::make_shared<DofMap>(mesh, std::set<int>{kCoreRegion, kShellRegion});
  core_area = core->Area();
  shell_area = shell->Area();
}

RealField ComputePsiD(const CoreShell &cs, double lambda0)
{
  DirichletHelmholtzSolver solver(cs.core, lambda0);
  const auto n = static_cast<Eigen::Index>(cs.core->Size());
  return {cs.core, solver.Solve(RealVector::Zero(n), RealVector::Ones(n))};
}

namespace
{

double Residual(const CoreShell &cs, double lambda0, bool check)
{
  DirichletHelmholtzSolver solver(cs.core, lambda0, check);
  const auto n = static_cast<Eigen::Index>(cs.core->Size());
  const RealVector psi = solver.Solve(RealVector::Zero(n), RealVector::Ones(n));
  return cs.shell_area + cs.core->Integral(psi);
}

}  // namespace

double ConsistencyResidual(const CoreShell &cs, double lambda0)
{
  return Residual(cs, lambda0, true);
}

double FindLambda0(const CoreShell &cs, double lo, double hi, double tol)
{
  if (!(lo > 0.0) || !(hi > lo))
  {
    throw ValidationError("find_lambda0: need 0 < lo < hi");
  }

  // Poles of the residual are Dirichlet eigenvalues whose eigenfunctions have
  // nonzero mean.
  const int available = static_cast<int>(cs.core->InteriorDofs().size());
  if (available > 0)
  {
    int count = std::min(8, available);
    std::vector<DirichletMode> modes;
    while (true)
    {
      modes = DirichletModes(*cs.core, count);
      if (modes.back().mu > hi || count == available)
      {
        break;
      }
      count = std::min(2 * count, available);
    }
    for (const auto &m : modes)
    {
      if (m.mu >= lo && m.mu <= hi && m.mean * m.mean > 1e-6 * cs.core_area)
      {
        std::ostringstream msg;
        msg << "find_lambda0: interval straddles Dirichlet eigenvalue " << m.mu;
        throw ValidationError(msg.str());
      }
    }
  }

  const double omega_area = cs.core_area + cs.shell_area;
  const double target = tol * omega_area;
  // Iterate well past the contract tolerance: the series is built on the
  // discrete root, and any offset shows up as a constant term in the remainder.
  const double strict = std::min(target, 1e-13 * omega_area);
  double a = lo, b = hi;
  double fa = Residual(cs, a, false), fb = Residual(cs, b, false);
  if (std::abs(fa) <= strict)
  {
    return a;
  }
  if (std::abs(fb) <= strict)
  {
    return b;
  }
  if ((fa > 0) == (fb > 0))
  {
    throw ValidationError("find_lambda0: no permissible lambda0 in interval (residual does not "
                          "change sign)");
  }

  // Illinois variant of regula falsi.
  int side = 0;
  for (int it = 0; it < 200; it++)
  {
    double c = (a * fb - b * fa) / (fb - fa);
    if (!(c > std::min(a, b) && c < std::max(a, b)))
    {
      c = 0.5 * (a + b);
    }
    const double fc = Residual(cs, c, false);
    if (std::abs(fc) <= strict)
    {
      return c;
    }
    if (std::abs(b - a) <= 4e-16 * std::abs(c) || c == a || c == b)
    {
      if (std::abs(fc) <= target)
      {
        return c;
      }
      break;
    }
    if ((fc > 0) == (fb > 0))
    {
      b = c;
      fb = fc;
      if (side == -1)
      {
        fa *= 0.5;
      }
      side = -1;
    }
    else
    {
      a = c;
      fa = fc;
      if (side == 1)
      {
        fb *= 0.5;
      }
      side = 1;
    }
  }
  throw SolverError("find_lambda0: root finding did not converge");
}

Complex EvalLambda(const SeriesCoefficients &s, Complex delta, int order)
{
  const int n = order < 0 ? s.Order() : std::min(order, s.Order());
  Complex acc = 0.0;
  for (int k = n; k >= 1; k--)
  {
    acc = (acc + s.lambda[k - 1]) * delta;
  }
  return acc + s.lambda0;
}

Complex EvalLambdaDerivative(const SeriesCoefficients &s, Complex delta, int order)
{
  const int n = order < 0 ? s.Order() : std::min(order, s.Order());
  Complex acc = 0.0;
  for (int k = n; k >= 1; k--)
  {
    acc = acc * delta + static_cast<double>(k) * s.lambda[k - 1];
  }
  return acc;
}

RealVector PerturbationSeries::Phi(int n) const
{
  const auto size = static_cast<Eigen::Index>(shell->Size());
  if (n == 0)
  {
    return RealVector::Ones(size);
  }
  return phi_ring[n - 1].array() + coeffs.e[n - 1];
}

RealVector PerturbationSeries::Psi(int n) const
{
  if (n == 0)
  {
    return psi_d;
  }
  return psi_ring[n - 1] + coeffs.e[n - 1] * psi_d;
}

PerturbationSeries ExpandSeries(const CoreShell &cs, double lambda0, int order,
                                const ExpandOptions &opts)
{
  if (order < 1)
  {
    throw ValidationError("expand_series: order must be at least 1");
  }
  const double omega_area = cs.core_area + cs.shell_area;

  auto dirichlet = std::make_shared<DirichletHelmholtzSolver>(cs.core, lambda0);
  const auto nc = static_cast<Eigen::Index>(cs.core->Size());
  const auto ns = static_cast<Eigen::Index>(cs.shell->Size());

  PerturbationSeries s;
  s.core = cs.core;
  s.shell = cs.shell;
  s.omega = cs.omega;
  s.coeffs.lambda0 = lambda0;
  s.psi_d = dirichlet->Solve(RealVector::Zero(nc), RealVector::Ones(nc));

  const double residual = cs.shell_area + cs.core->Integral(s.psi_d);
  if (std::abs(residual) > opts.entry_tol * omega_area)
  {
    std::ostringstream msg;
    msg << "expand_series: consistency residual " << residual << " exceeds " << opts.entry_tol
        << "*|Omega|; use lambda0 from find_lambda0 for this mesh";
    throw ValidationError(msg.str());
  }

  const SparseMatrix<double> Mc = AssembleMass(*cs.core);
  const RealVector Mpsi_d = Mc * s.psi_d;
  s.coeffs.normalization = cs.shell_area + s.psi_d.dot(Mpsi_d);
  const double norm = s.coeffs.normalization;

  const BoundaryFunctional flux_d = WeakNormalFlux(*cs.core, s.psi_d, lambda0, RealVector::Zero(nc));
  NeumannSolver neumann(cs.shell);
  const double defect_tol = opts.defect_tol * omega_area * std::max(1.0, lambda0);

  // λ_k including λ_0 at index 0.
  std::vector<double> lam{lambda0};
  for (int n = 0; n < order; n++)
  {
    RealVector shell_src = RealVector::Zero(ns);
    for (int k = 0; k <= n; k++)
    {
      shell_src += lam[k] * s.Phi(n - k);
    }
    RealVector core_src = RealVector::Zero(nc);
    for (int k = 1; k <= n; k++)
    {
      core_src += lam[k] * s.Psi(n - k);
    }
    const BoundaryFunctional flux_n = WeakNormalFlux(*cs.core, s.Psi(n), lambda0, core_src);
    auto [phi, defect] = neumann.Solve(shell_src, flux_n);
    s.defects.push_back(defect);
    if (std::abs(defect) > defect_tol)
    {
      std::ostringstream msg;
      msg << "expand_series: Neumann compatibility defect " << defect << " at order " << n + 1
          << " exceeds tolerance " << defect_tol;
      throw SolverError(msg.str());
    }

    const double lam_next = flux_d.Apply(*cs.shell, phi) / norm;
    lam.push_back(lam_next);

    RealVector src = RealVector::Zero(nc);
    for (int k = 1; k <= n + 1; k++)
    {
      src += lam[k] * s.Psi(n + 1 - k);
    }
    const RealVector g = cs.core->Restrict(*cs.shell, phi);
    RealVector psi = dirichlet->Solve(src, g);
    const double e = -psi.dot(Mpsi_d) / norm;

    s.phi_ring.push_back(std::move(phi));
    s.psi_ring.push_back(std::move(psi));
    s.coeffs.lambda.push_back(lam_next);
    s.coeffs.e.push_back(e);
  }

  const SparseMatrix<double> Ks = neumann.Stiffness();
  s.lambda1_energy = -s.phi_ring[0].dot(Ks * s.phi_ring[0]) / norm;
  return s;
}

ComplexField EvalField(const PerturbationSeries &s, Complex delta, int order)
{
  const int n_max = order < 0 ? s.coeffs.Order() : std::min(order, s.coeffs.Order());
  ComplexVector shell_u = ComplexVector::Zero(static_cast<Eigen::Index>(s.shell->Size()));
  ComplexVector core_u = ComplexVector::Zero(static_cast<Eigen::Index>(s.core->Size()));
  Complex dn = 1.0;
  for (int n = 0; n <= n_max; n++)
  {
    shell_u += dn * s.Phi(n).cast<Complex>();
    core_u += dn * s.Psi(n).cast<Complex>();
    dn *= delta;
  }
  ComplexVector u = s.omega->Restrict(*s.shell, shell_u);
  const ComplexVector uc = s.omega->Restrict(*s.core, core_u);
  for (std::size_t i = 0; i < s.omega->Size(); i++)
  {
    if (s.core->Local(s.omega->Global(i)) >= 0)
    {
      u[static_cast<Eigen::Index>(i)] = uc[static_cast<Eigen::Index>(i)];
    }
  }
  return {s.omega, u};
}

RealVector BaseField(const CoreShell &cs, const RealVector &psi_d)
{
  RealVector u = RealVector::Ones(static_cast<Eigen::Index>(cs.omega->Size()));
  for (std::size_t i = 0; i < cs.omega->Size(); i++)
  {
    const int j = cs.core->Local(cs.omega->Global(i));
    if (j >= 0)
    {
      u[static_cast<Eigen::Index>(i)] = psi_d[j];
    }
  }
  return u;
}

}  // namespace enzres
