// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ENZRES_DESIGN_HPP
#define ENZRES_DESIGN_HPP

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "enzres/fem.hpp"

namespace enzres
{

//
// Relaxed shell design on B∖D̄ (regions 1 and 2 of the mesh). The Lagrangian is
//   L(w, θ) = Σ_e θ_e A_e (½|∇w|²_e − λ0 mean_e(w)) + ⟨f, w⟩
// with per-element densities θ_e ∈ [0, 1]; f is a functional on ∂D.
//
class DesignProblem
{
public:
  // normalization is |Ω∖D̄| + ∫ψ_d² used to convert saddle values to λ1;
  // pass psi_d_sq = ∫_D ψ_d² when f is the flux of ψ_d.
  DesignProblem(std::shared_ptr<const Mesh> mesh, double lambda0, BoundaryFunctional f,
                std::optional<double> psi_d_sq = std::nullopt);

  const DofMap &Dofs() const { return *dofs_; }
  std::shared_ptr<const DofMap> DofsPtr() const { return dofs_; }
  double Lambda0() const { return lambda0_; }
  const BoundaryFunctional &F() const { return f_; }
  const RealVector &FVector() const { return f_vec_; }
  double FTotal() const { return f_total_; }
  // Target area A0 = ⟨f, 1⟩ / λ0.
  double A0() const { return f_total_ / lambda0_; }
  double Area() const { return area_; }
  double Diameter() const { return diameter_; }
  std::optional<double> PsiDSquared() const { return psi_d_sq_; }

  std::size_t NumElements() const { return areas_.size(); }
  const std::vector<double> &ElementAreas() const { return areas_; }
  const std::array<int, 3> &ElementDofs(std::size_t e) const { return elem_dofs_[e]; }
  const Eigen::Matrix3d &ElementStiffness(std::size_t e) const { return elem_k_[e]; }
  Point Centroid(std::size_t e) const;

  const SparseMatrix<double> &Stiffness() const { return K_; }
  const SparseMatrix<double> &Mass() const { return M_; }

private:
  std::shared_ptr<const DofMap> dofs_;
  double lambda0_;
  BoundaryFunctional f_;
  RealVector f_vec_;
  double f_total_, area_, diameter_;
  std::optional<double> psi_d_sq_;
  std::vector<double> areas_;
  std::vector<std::array<int, 3>> elem_dofs_;
  std::vector<Eigen::Matrix3d> elem_k_;
  SparseMatrix<double> K_, M_;
};

// D = disk of radius 1 (region 0), B = disk of radius r_box; f = weak normal
// flux of ψ_d at λ0.
DesignProblem MakeDiskDesignProblem(double h, double r_box = 2.0, double lambda0 = 9.0);

// Design problem on a mesh holding the core (region 0) and the design region
// (regions 1 and 2), f = weak normal flux of ψ_d at λ0.
DesignProblem MakeDesignProblem(std::shared_ptr<const Mesh> mesh, double lambda0);

// Per element ½|∇w|² − λ0·mean(w).
RealVector EnergyDensity(const DesignProblem &prob, const RealVector &w);

// Smoothed plus function p_β(x) = (x + √(x² + β²))/2, p_0(x) = max(x, 0).
double SmoothPlus(double x, double beta);

double DualObjective(const DesignProblem &prob, const RealVector &w, double beta = 0.0);

double Lagrangian(const DesignProblem &prob, const RealVector &w, const RealVector &theta);

struct Bathtub
{
  RealVector theta;
  double z0 = 0.0;
};

// θ = 1 above the level z0, 0 below, area-proportional split on the tie
// level, Σ θ_e a_e = A0.
Bathtub BathtubProjection(const RealVector &density, const std::vector<double> &areas, double A0);

// inf_w L(w, θ); −∞ when the infimum is unbounded (area constraint violated on
// some connected component of the support of θ, or f acting off the support).
double PrimalValue(const DesignProblem &prob, const RealVector &theta);

struct DualOptions
{
  double beta_start = 1e-2;  // relative to λ0·diam²
  double beta_tol = 1e-8;    // continuation stops once β ≤ beta_tol·λ0·diam²
  double tol = 1e-10;        // stationarity in the (K+M)⁻¹ norm, relative to max(1, ⟨f,1⟩)
  int max_newton = 200;      // per β level
};

struct DualResult
{
  RealVector w;
  double beta = 0.0;
  double stationarity = 0.0;
  int newton_steps = 0;
  RealVector theta;  // multipliers p_β'(density) at the final β
};

DualResult MinimizeDual(const DesignProblem &prob, const DualOptions &opts = {});
// on_level is called after each β level converges.
DualResult MinimizeDual(const DesignProblem &prob, const DualOptions &opts,
                        const std::function<void(const DualResult &)> &on_level);

struct DesignRecord
{
  double primal = 0.0;
  double dual = 0.0;
};

struct DesignState
{
  RealVector theta;        // relaxed densities
  RealVector theta_shape;  // bathtub projection of the final energy density
  RealVector w;
  double z0 = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  std::vector<DesignRecord> history;
  bool converged = false;
  double fractional_area = 0.0;  // area where θ is strictly between 0.01 and 0.99
};

// Dual route: smoothed-dual Newton with β continuation, multipliers θ_β
// corrected to the exact area, primal value by an exact solve.
DesignState OptimizeDesign(const DesignProblem &prob, const DualOptions &opts = {},
                           double gap_tol = 1e-6);

struct SaddleOptions
{
  double eps_start = 1e-1;
  double eps_end = 1e-6;
  int iterations = 40;
  double tol = 1e-6;    // relative duality gap
  int line_search = 12;  // bisection steps for the step length
};

// Alternating scheme: w from the ε-regularized primal with conductivity
// θ + ε(1 − θ), θ from the bathtub projection of the energy density.
DesignState SaddleSolve(const DesignProblem &prob, const SaddleOptions &opts = {});

// λ1 = 2·value/(A0 + ∫ψ_d²) for a saddle or primal value.
double Lambda1OfValue(const DesignProblem &prob, double value);
double Lambda1OfDesign(const DesignState &state, const DesignProblem &prob);

// θ from the bathtub projection of a level function evaluated at centroids.
RealVector LevelSetDesign(const DesignProblem &prob,
                          const std::function<double(double, double)> &level);

// ∫ |θ − χ| with χ the indicator of `inside`, by subsampling each element.
double SymmetricDifference(const DesignProblem &prob, const RealVector &theta,
                           const std::function<bool(double, double)> &inside, int subdiv = 16);

// Σ a_e (|θ_e min(d_e − z0, 0)| + |(1 − θ_e) max(d_e − z0, 0)|).
double Complementarity(const DesignProblem &prob, const RealVector &theta,
                       const RealVector &density, double z0);

void WriteDesignCsv(const DesignProblem &prob, const DesignState &state, std::ostream &out);

}  // namespace enzres

#endif  // ENZRES_DESIGN_HPP
