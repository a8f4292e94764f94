// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ENZRES_PERTURBATION_HPP
#define ENZRES_PERTURBATION_HPP

#include <memory>
#include <vector>

#include "enzres/fem.hpp"
#include "enzres/mesh.hpp"

namespace enzres
{

//
// Region bookkeeping shared by the core-shell solvers: the core D (region 0),
// the shell Ω∖D̄ (region 1) and their union Ω. Region 2 is ignored.
//
struct CoreShell
{
  explicit CoreShell(std::shared_ptr<const Mesh> mesh);

  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const DofMap> core, shell, omega;
  double core_area, shell_area;
};

// Solution of −Δψ = λ0 ψ in D, ψ = 1 on ∂D. Throws NearEigenvalueError when λ0
// is numerically a Dirichlet eigenvalue of D.
RealField ComputePsiD(const CoreShell &cs, double lambda0);

// |Ω∖D̄| + ∫_D ψ_d (signed).
double ConsistencyResidual(const CoreShell &cs, double lambda0);

// Root of the consistency residual in (lo, hi), |residual| ≤ tol·|Ω|.
double FindLambda0(const CoreShell &cs, double lo, double hi, double tol = 1e-10);

// λ-coefficients of the series; this is all a frequency trace needs.
struct SeriesCoefficients
{
  double lambda0 = 0.0;
  std::vector<double> lambda;  // λ1..λN
  std::vector<double> e;       // e1..eN
  double normalization = 0.0;  // |Ω∖D̄| + ∫ψ_d²

  int Order() const { return static_cast<int>(lambda.size()); }
};

// Σ_{n≤order} λ_n δⁿ (order < 0 means the full series) and its δ-derivative.
Complex EvalLambda(const SeriesCoefficients &s, Complex delta, int order = -1);
Complex EvalLambdaDerivative(const SeriesCoefficients &s, Complex delta, int order = -1);

struct PerturbationSeries
{
  SeriesCoefficients coeffs;
  std::shared_ptr<const DofMap> core, shell, omega;
  RealVector psi_d;
  std::vector<RealVector> phi_ring;  // φ̊_1..φ̊_N on the shell
  std::vector<RealVector> psi_ring;  // ψ̊_1..ψ̊_N on the core
  std::vector<double> defects;       // Neumann compatibility defect per order
  double lambda1_energy = 0.0;       // −∫|∇φ̊_1|² / normalization

  // φ_n = φ̊_n + e_n and ψ_n = ψ̊_n + e_n ψ_d with φ_0 = 1, ψ_0 = ψ_d.
  RealVector Phi(int n) const;
  RealVector Psi(int n) const;
};

struct ExpandOptions
{
  double entry_tol = 1e-6;   // |residual(λ0)| / |Ω|
  double defect_tol = 1e-8;  // per order, relative to |Ω|·max(1, λ0)
};

PerturbationSeries ExpandSeries(const CoreShell &cs, double lambda0, int order,
                                const ExpandOptions &opts = {});

// u_δ = 1 + Σ δⁿφ_n on the shell and ψ_d + Σ δⁿψ_n on the core, on Ω.
ComplexField EvalField(const PerturbationSeries &s, Complex delta, int order = -1);

// u0: 1 on the shell, ψ_d on the core.
RealVector BaseField(const CoreShell &cs, const RealVector &psi_d);

}  // namespace enzres

#endif  // ENZRES_PERTURBATION_HPP
