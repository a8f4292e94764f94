// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ENZRES_FEM_HPP
#define ENZRES_FEM_HPP

#include <complex>
#include <map>
#include <memory>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "enzres/mesh.hpp"

namespace enzres
{

using Complex = std::complex<double>;

template <typename S>
using SparseMatrix = Eigen::SparseMatrix<S>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using RealVector = Vector<double>;
using ComplexVector = Vector<Complex>;

//
// Numbering of the nodes touched by the triangles of a set of regions. Local
// index i corresponds to mesh node Global(i); local order follows the global
// order.
//
class DofMap
{
public:
  DofMap(std::shared_ptr<const Mesh> mesh, std::set<int> regions);

  const Mesh &GetMesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> MeshPtr() const { return mesh_; }
  const std::set<int> &Regions() const { return regions_; }

  std::size_t Size() const { return global_.size(); }
  int Global(std::size_t i) const { return global_[i]; }
  // -1 when the node is not part of this map.
  int Local(int node) const { return local_[node]; }

  // Triangles belonging to the region set.
  const std::vector<std::size_t> &TriangleIndices() const { return triangles_; }

  // Local indices of nodes on the boundary of the region set (edges with a
  // single adjacent triangle from the set).
  const std::vector<int> &BoundaryDofs() const { return boundary_; }
  const std::vector<int> &InteriorDofs() const { return interior_; }
  bool IsBoundary(std::size_t i) const { return on_boundary_[i]; }

  double Area() const;

  // ∫ v dx for a nodal P1 function.
  template <typename S>
  S Integral(const Vector<S> &v) const;

  // Restriction of a field on `other` to this map. Nodes of this map that are
  // missing in `other` are set to zero.
  template <typename S>
  Vector<S> Restrict(const DofMap &other, const Vector<S> &v) const;

private:
  std::shared_ptr<const Mesh> mesh_;
  std::set<int> regions_;
  std::vector<int> global_, local_;
  std::vector<std::size_t> triangles_;
  std::vector<int> boundary_, interior_;
  std::vector<bool> on_boundary_;
};

template <typename S>
struct Field
{
  std::shared_ptr<const DofMap> dofs;
  Vector<S> values;
};

using RealField = Field<double>;
using ComplexField = Field<Complex>;

//
// Linear functional on nodal P1 functions concentrated on boundary nodes:
// ⟨f, v⟩ = Σ weights[i] v(nodes[i]), nodes given as mesh node indices.
//
struct BoundaryFunctional
{
  std::vector<int> nodes;
  std::vector<double> weights;

  double Total() const;
  double Apply(const DofMap &dofs, const RealVector &v) const;
  // Right-hand side vector on `dofs` (node weights scattered into place).
  RealVector Scatter(const DofMap &dofs) const;
  BoundaryFunctional Scaled(double s) const;
};

template <typename S>
SparseMatrix<S> AssembleStiffness(const DofMap &dofs, const std::map<int, S> &weight_by_region);
template <typename S>
SparseMatrix<S> AssembleMass(const DofMap &dofs, const std::map<int, S> &weight_by_region);

SparseMatrix<double> AssembleStiffness(const DofMap &dofs);
SparseMatrix<double> AssembleMass(const DofMap &dofs);

// Direct sparse LU; throws SolverError when singular or the relative residual
// exceeds 1e-10.
template <typename S>
Vector<S> LinearSolve(const SparseMatrix<S> &A, const Vector<S> &b);

//
// Discrete (−Δ − λ)u = s in the region set with u = g on its boundary. The
// factorization is kept so that repeated solves at the same λ are cheap.
//
class DirichletHelmholtzSolver
{
public:
  // With check_near_eigenvalue, the constructor estimates the distance from
  // λ to the nearest discrete Dirichlet eigenvalue and throws
  // NearEigenvalueError when it is below tol·max(1, |λ|).
  DirichletHelmholtzSolver(std::shared_ptr<const DofMap> dofs, double lambda,
                           bool check_near_eigenvalue = true, double tol = 1e-2);

  // `source` is nodal on the full map; only the boundary entries of `g` are used.
  RealVector Solve(const RealVector &source, const RealVector &g) const;

  const DofMap &Dofs() const { return *dofs_; }
  double Lambda() const { return lambda_; }
  // Estimated |λ − μ| for the nearest discrete Dirichlet eigenvalue μ.
  double EigenvalueDistance() const { return distance_; }

private:
  std::shared_ptr<const DofMap> dofs_;
  double lambda_;
  double distance_ = 0.0;
  SparseMatrix<double> K_, M_, A_ii_;
  Eigen::SparseLU<SparseMatrix<double>> lu_;
};

// Weak normal derivative ∂_ν u on the boundary of the region set (ν outward):
// v ↦ ∫ ∇u·∇v − (λu + s) v dx evaluated on boundary hat functions.
BoundaryFunctional WeakNormalFlux(const DofMap &dofs, const RealVector &u, double lambda,
                                  const RealVector &source);

//
// Pure Neumann problem −Δφ = s in the region set with ∂_ν φ = −g on the
// boundary carried by g (g is a flux with respect to the normal pointing out
// of the core, i.e. into the shell), homogeneous elsewhere. The mean-zero
// solution is obtained from a bordered system; the defect ∫s − ⟨g, 1⟩ of the
// compatibility condition is returned alongside.
//
class NeumannSolver
{
public:
  explicit NeumannSolver(std::shared_ptr<const DofMap> dofs);

  struct Result
  {
    RealVector u;
    double defect = 0.0;
  };
  Result Solve(const RealVector &source, const BoundaryFunctional &flux) const;

  const DofMap &Dofs() const { return *dofs_; }
  const SparseMatrix<double> &Stiffness() const { return K_; }
  const SparseMatrix<double> &Mass() const { return M_; }

private:
  std::shared_ptr<const DofMap> dofs_;
  SparseMatrix<double> K_, M_;
  RealVector c_;
  double area_;
  Eigen::SparseLU<SparseMatrix<double>> lu_;
};

struct DirichletMode
{
  double mu = 0.0;
  RealVector chi;  // nodal on the full map, zero on the boundary
  double mean = 0.0;
};

// First `count` discrete Dirichlet eigenpairs of −Δ on the region set,
// M-orthonormal, nondecreasing.
std::vector<DirichletMode> DirichletModes(const DofMap &dofs, int count);

}  // namespace enzres

#endif  // ENZRES_FEM_HPP
