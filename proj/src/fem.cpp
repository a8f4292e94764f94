// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include "enzres/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "enzres/error.hpp"

namespace enzres
{

namespace
{

struct ElementGeometry
{
  double area;
  std::array<double, 3> b, c;  // 2·area·∇λ_i = (b_i, c_i)
};

ElementGeometry Geometry(const Mesh &mesh, std::size_t t)
{
  const auto &v = mesh.Triangles()[t].v;
  const auto &p = mesh.Nodes();
  ElementGeometry g;
  g.area = mesh.TriangleArea(t);
  for (int i = 0; i < 3; i++)
  {
    const auto &pj = p[v[(i + 1) % 3]], &pk = p[v[(i + 2) % 3]];
    g.b[i] = pj.y - pk.y;
    g.c[i] = pk.x - pj.x;
  }
  return g;
}

template <typename S>
const S &RegionWeight(const std::map<int, S> &weights, int region)
{
  auto it = weights.find(region);
  if (it == weights.end())
  {
    throw ValidationError("assembly: no weight given for region " + std::to_string(region));
  }
  return it->second;
}

template <typename S>
void CheckWeights(const DofMap &dofs, const std::map<int, S> &weights)
{
  for (int r : dofs.Regions())
  {
    RegionWeight(weights, r);
  }
}

// Selection matrix picking the rows listed in `idx` out of an n-vector.
SparseMatrix<double> Selection(const std::vector<int> &idx, std::size_t n)
{
  SparseMatrix<double> P(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(n));
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); i++)
  {
    trips.emplace_back(static_cast<int>(i), idx[i], 1.0);
  }
  P.setFromTriplets(trips.begin(), trips.end());
  return P;
}

template <typename S, typename Solver>
Vector<S> CheckedSolve(const Solver &solver, const SparseMatrix<S> &A, const Vector<S> &b,
                       const char *what)
{
  Vector<S> x = solver.solve(b);
  const double bnorm = b.norm();
  const double rnorm = (A * x - b).norm();
  if (!x.allFinite() || rnorm > 1e-10 * bnorm)
  {
    throw SolverError(std::string(what) + ": relative residual " +
                      std::to_string(bnorm > 0 ? rnorm / bnorm : rnorm) + " above 1e-10");
  }
  return x;
}

RealVector RandomVector(Eigen::Index n, unsigned seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  RealVector x(n);
  for (Eigen::Index i = 0; i < n; i++)
  {
    x[i] = dist(rng);
  }
  return x;
}

}  // namespace

DofMap::DofMap(std::shared_ptr<const Mesh> mesh, std::set<int> regions)
  : mesh_(std::move(mesh)), regions_(std::move(regions))
{
  const auto &tris = mesh_->Triangles();
  std::vector<bool> used(mesh_->NumNodes(), false);
  std::unordered_map<std::uint64_t, int> edge_count;
  for (std::size_t t = 0; t < tris.size(); t++)
  {
    if (!regions_.count(tris[t].region))
    {
      continue;
    }
    triangles_.push_back(t);
    for (int k = 0; k < 3; k++)
    {
      int a = tris[t].v[k], b = tris[t].v[(k + 1) % 3];
      used[a] = true;
      if (a > b)
      {
        std::swap(a, b);
      }
      edge_count[(static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b)]++;
    }
  }
  if (triangles_.empty())
  {
    throw ValidationError("region set contains no triangles");
  }
  local_.assign(mesh_->NumNodes(), -1);
  for (std::size_t i = 0; i < used.size(); i++)
  {
    if (used[i])
    {
      local_[i] = static_cast<int>(global_.size());
      global_.push_back(static_cast<int>(i));
    }
  }
  on_boundary_.assign(global_.size(), false);
  for (const auto &[key, count] : edge_count)
  {
    if (count == 1)
    {
      on_boundary_[local_[key >> 32]] = true;
      on_boundary_[local_[key & 0xffffffffu]] = true;
    }
  }
  for (std::size_t i = 0; i < global_.size(); i++)
  {
    (on_boundary_[i] ? boundary_ : interior_).push_back(static_cast<int>(i));
  }
}

double DofMap::Area() const
{
  double a = 0.0;
  for (auto t : triangles_)
  {
    a += mesh_->TriangleArea(t);
  }
  return a;
}

template <typename S>
S DofMap::Integral(const Vector<S> &v) const
{
  S sum = S(0);
  for (auto t : triangles_)
  {
    const auto &tv = mesh_->Triangles()[t].v;
    sum += (mesh_->TriangleArea(t) / 3.0) *
           (v[local_[tv[0]]] + v[local_[tv[1]]] + v[local_[tv[2]]]);
  }
  return sum;
}

template <typename S>
Vector<S> DofMap::Restrict(const DofMap &other, const Vector<S> &v) const
{
  Vector<S> out = Vector<S>::Zero(static_cast<Eigen::Index>(Size()));
  for (std::size_t i = 0; i < Size(); i++)
  {
    const int j = other.Local(global_[i]);
    if (j >= 0)
    {
      out[static_cast<Eigen::Index>(i)] = v[j];
    }
  }
  return out;
}

template double DofMap::Integral(const RealVector &) const;
template Complex DofMap::Integral(const ComplexVector &) const;
template RealVector DofMap::Restrict(const DofMap &, const RealVector &) const;
template ComplexVector DofMap::Restrict(const DofMap &, const ComplexVector &) const;

double BoundaryFunctional::Total() const
{
  double sum = 0.0;
  for (double w : weights)
  {
    sum += w;
  }
  return sum;
}

double BoundaryFunctional::Apply(const DofMap &dofs, const RealVector &v) const
{
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); i++)
  {
    const int j = dofs.Local(nodes[i]);
    if (j < 0)
    {
      throw ValidationError("boundary functional node outside the field's support");
    }
    sum += weights[i] * v[j];
  }
  return sum;
}

RealVector BoundaryFunctional::Scatter(const DofMap &dofs) const
{
  RealVector out = RealVector::Zero(static_cast<Eigen::Index>(dofs.Size()));
  for (std::size_t i = 0; i < nodes.size(); i++)
  {
    const int j = dofs.Local(nodes[i]);
    if (j < 0)
    {
      throw ValidationError("boundary functional node outside the region set");
    }
    out[j] += weights[i];
  }
  return out;
}

BoundaryFunctional BoundaryFunctional::Scaled(double s) const
{
  BoundaryFunctional out = *this;
  for (double &w : out.weights)
  {
    w *= s;
  }
  return out;
}

template <typename S>
SparseMatrix<S> AssembleStiffness(const DofMap &dofs, const std::map<int, S> &weight_by_region)
{
  CheckWeights(dofs, weight_by_region);
  const Mesh &mesh = dofs.GetMesh();
  std::vector<Eigen::Triplet<S>> trips;
  trips.reserve(9 * dofs.TriangleIndices().size());
  for (auto t : dofs.TriangleIndices())
  {
    const auto &tri = mesh.Triangles()[t];
    const S w = RegionWeight(weight_by_region, tri.region);
    const auto g = Geometry(mesh, t);
    for (int i = 0; i < 3; i++)
    {
      for (int j = 0; j < 3; j++)
      {
        const double kij = (g.b[i] * g.b[j] + g.c[i] * g.c[j]) / (4.0 * g.area);
        trips.emplace_back(dofs.Local(tri.v[i]), dofs.Local(tri.v[j]), w * kij);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(dofs.Size());
  SparseMatrix<S> K(n, n);
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();
  return K;
}

template <typename S>
SparseMatrix<S> AssembleMass(const DofMap &dofs, const std::map<int, S> &weight_by_region)
{
  CheckWeights(dofs, weight_by_region);
  const Mesh &mesh = dofs.GetMesh();
  std::vector<Eigen::Triplet<S>> trips;
  trips.reserve(9 * dofs.TriangleIndices().size());
  for (auto t : dofs.TriangleIndices())
  {
    const auto &tri = mesh.Triangles()[t];
    const S w = RegionWeight(weight_by_region, tri.region);
    const double a = mesh.TriangleArea(t);
    for (int i = 0; i < 3; i++)
    {
      for (int j = 0; j < 3; j++)
      {
        trips.emplace_back(dofs.Local(tri.v[i]), dofs.Local(tri.v[j]),
                           w * (a / 12.0 * (i == j ? 2.0 : 1.0)));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(dofs.Size());
  SparseMatrix<S> M(n, n);
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

template SparseMatrix<double> AssembleStiffness(const DofMap &, const std::map<int, double> &);
template SparseMatrix<Complex> AssembleStiffness(const DofMap &, const std::map<int, Complex> &);
template SparseMatrix<double> AssembleMass(const DofMap &, const std::map<int, double> &);
template SparseMatrix<Complex> AssembleMass(const DofMap &, const std::map<int, Complex> &);

namespace
{

std::map<int, double> UnitWeights(const DofMap &dofs)
{
  std::map<int, double> w;
  for (int r : dofs.Regions())
  {
    w[r] = 1.0;
  }
  return w;
}

}  // namespace

SparseMatrix<double> AssembleStiffness(const DofMap &dofs)
{
  return AssembleStiffness(dofs, UnitWeights(dofs));
}

SparseMatrix<double> AssembleMass(const DofMap &dofs)
{
  return AssembleMass(dofs, UnitWeights(dofs));
}

template <typename S>
Vector<S> LinearSolve(const SparseMatrix<S> &A, const Vector<S> &b)
{
  if (A.rows() != A.cols() || A.rows() != b.size())
  {
    throw ValidationError("linear_solve: dimension mismatch");
  }
  SparseMatrix<S> Ac = A;
  Ac.makeCompressed();
  Eigen::SparseLU<SparseMatrix<S>> lu;
  lu.analyzePattern(Ac);
  lu.factorize(Ac);
  if (lu.info() != Eigen::Success)
  {
    throw SolverError("linear_solve: matrix is singular to working precision");
  }
  return CheckedSolve<S>(lu, Ac, b, "linear_solve");
}

template RealVector LinearSolve(const SparseMatrix<double> &, const RealVector &);
template ComplexVector LinearSolve(const SparseMatrix<Complex> &, const ComplexVector &);

DirichletHelmholtzSolver::DirichletHelmholtzSolver(std::shared_ptr<const DofMap> dofs,
                                                   double lambda, bool check_near_eigenvalue,
                                                   double tol)
  : dofs_(std::move(dofs)), lambda_(lambda)
{
  K_ = AssembleStiffness(*dofs_);
  M_ = AssembleMass(*dofs_);
  const auto &interior = dofs_->InteriorDofs();
  distance_ = std::numeric_limits<double>::infinity();
  if (interior.empty())
  {
    return;
  }
  const SparseMatrix<double> P = Selection(interior, dofs_->Size());
  A_ii_ = P * SparseMatrix<double>(K_ - lambda * M_) * P.transpose();
  A_ii_.makeCompressed();
  lu_.analyzePattern(A_ii_);
  lu_.factorize(A_ii_);
  if (lu_.info() != Eigen::Success)
  {
    throw NearEigenvalueError("Dirichlet problem is singular: lambda = " + std::to_string(lambda) +
                                " is a Dirichlet eigenvalue of the region",
                              0.0);
  }
  if (!check_near_eigenvalue)
  {
    return;
  }

  // Inverse power iteration on (K - λM)⁻¹M: the growth factor tends to
  // 1/|μ - λ| for the discrete eigenvalue μ nearest to λ.
  const SparseMatrix<double> M_ii = P * M_ * P.transpose();
  RealVector x = RandomVector(static_cast<Eigen::Index>(interior.size()), 0x5eed);
  x /= std::sqrt(x.dot(M_ii * x));
  double growth = 0.0;
  for (int it = 0; it < 16; it++)
  {
    RealVector y = lu_.solve(M_ii * x);
    const double ny = std::sqrt(y.dot(M_ii * y));
    if (!std::isfinite(ny) || ny == 0.0)
    {
      growth = std::numeric_limits<double>::infinity();
      break;
    }
    growth = ny;
    x = y / ny;
  }
  distance_ = 1.0 / growth;
  if (distance_ <= tol * std::max(1.0, std::abs(lambda)))
  {
    throw NearEigenvalueError("lambda = " + std::to_string(lambda) +
                                " is near a Dirichlet eigenvalue of the region (estimated "
                                "distance " +
                                std::to_string(distance_) + ")",
                              distance_);
  }
}

RealVector DirichletHelmholtzSolver::Solve(const RealVector &source, const RealVector &g) const
{
  const auto n = static_cast<Eigen::Index>(dofs_->Size());
  if (source.size() != n || g.size() != n)
  {
    throw ValidationError("Dirichlet solve: field size does not match the region");
  }
  RealVector u = RealVector::Zero(n);
  for (int i : dofs_->BoundaryDofs())
  {
    u[i] = g[i];
  }
  const auto &interior = dofs_->InteriorDofs();
  if (interior.empty())
  {
    return u;
  }
  const RealVector full = M_ * source - (K_ * u - lambda_ * (M_ * u));
  RealVector rhs(static_cast<Eigen::Index>(interior.size()));
  for (std::size_t i = 0; i < interior.size(); i++)
  {
    rhs[static_cast<Eigen::Index>(i)] = full[interior[i]];
  }
  const RealVector ui = CheckedSolve<double>(lu_, A_ii_, rhs, "Dirichlet solve");
  for (std::size_t i = 0; i < interior.size(); i++)
  {
    u[interior[i]] = ui[static_cast<Eigen::Index>(i)];
  }
  return u;
}

BoundaryFunctional WeakNormalFlux(const DofMap &dofs, const RealVector &u, double lambda,
                                  const RealVector &source)
{
  if (dofs.Regions() != std::set<int>{kCoreRegion})
  {
    throw ValidationError("weak normal flux: field must be supported on region 0");
  }
  const auto n = static_cast<Eigen::Index>(dofs.Size());
  if (u.size() != n || source.size() != n)
  {
    throw ValidationError("weak normal flux: field size does not match the region");
  }
  const SparseMatrix<double> K = AssembleStiffness(dofs);
  const SparseMatrix<double> M = AssembleMass(dofs);
  const RealVector r = K * u - M * (lambda * u + source);
  BoundaryFunctional f;
  for (int i : dofs.BoundaryDofs())
  {
    f.nodes.push_back(dofs.Global(static_cast<std::size_t>(i)));
    f.weights.push_back(r[i]);
  }
  return f;
}

NeumannSolver::NeumannSolver(std::shared_ptr<const DofMap> dofs) : dofs_(std::move(dofs))
{
  K_ = AssembleStiffness(*dofs_);
  M_ = AssembleMass(*dofs_);
  const auto n = static_cast<Eigen::Index>(dofs_->Size());
  c_ = M_ * RealVector::Ones(n);
  area_ = c_.sum();

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(K_.nonZeros() + 2 * n));
  for (Eigen::Index k = 0; k < K_.outerSize(); k++)
  {
    for (SparseMatrix<double>::InnerIterator it(K_, k); it; ++it)
    {
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  for (Eigen::Index i = 0; i < n; i++)
  {
    trips.emplace_back(static_cast<int>(i), static_cast<int>(n), c_[i]);
    trips.emplace_back(static_cast<int>(n), static_cast<int>(i), c_[i]);
  }
  SparseMatrix<double> B(n + 1, n + 1);
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();
  lu_.analyzePattern(B);
  lu_.factorize(B);
  if (lu_.info() != Eigen::Success)
  {
    throw SolverError("Neumann solve: bordered system is singular (region disconnected?)");
  }
}

NeumannSolver::Result NeumannSolver::Solve(const RealVector &source,
                                           const BoundaryFunctional &flux) const
{
  const auto n = static_cast<Eigen::Index>(dofs_->Size());
  if (source.size() != n)
  {
    throw ValidationError("Neumann solve: source size does not match the region");
  }
  RealVector rhs = RealVector::Zero(n + 1);
  rhs.head(n) = M_ * source - flux.Scatter(*dofs_);
  RealVector x = lu_.solve(rhs);
  // Relative residual of the consistent part: the multiplier absorbs the
  // compatibility defect exactly, so the bordered residual must vanish.
  const RealVector r = K_ * x.head(n) + c_ * x[n] - rhs.head(n);
  if (!x.allFinite() || r.norm() > 1e-10 * rhs.norm())
  {
    throw SolverError("Neumann solve: residual above tolerance");
  }
  Result out;
  out.u = x.head(n);
  out.u.array() -= c_.dot(out.u) / area_;
  out.defect = c_.dot(source) - flux.Total();
  return out;
}

std::vector<DirichletMode> DirichletModes(const DofMap &dofs, int count)
{
  const auto &interior = dofs.InteriorDofs();
  const auto ni = static_cast<Eigen::Index>(interior.size());
  if (count < 1 || count > ni)
  {
    throw ValidationError("dirichlet_modes: requested " + std::to_string(count) +
                          " modes but the region has " + std::to_string(ni) + " interior nodes");
  }
  const SparseMatrix<double> P = Selection(interior, dofs.Size());
  const SparseMatrix<double> K = P * AssembleStiffness(dofs) * P.transpose();
  const SparseMatrix<double> M = P * AssembleMass(dofs) * P.transpose();
  Eigen::SimplicialLDLT<SparseMatrix<double>> ldlt(K);
  if (ldlt.info() != Eigen::Success)
  {
    throw SolverError("dirichlet_modes: stiffness factorization failed");
  }

  const Eigen::Index p = std::min<Eigen::Index>(ni, std::max(2 * count, count + 8));
  Eigen::MatrixXd X(ni, p);
  for (Eigen::Index j = 0; j < p; j++)
  {
    X.col(j) = RandomVector(ni, 1000u + static_cast<unsigned>(j));
  }
  Eigen::VectorXd mu;
  bool converged = false;
  for (int it = 0; it < 500 && !converged; it++)
  {
    Eigen::MatrixXd MX = M * X;
    for (Eigen::Index j = 0; j < p; j++)
    {
      X.col(j) = ldlt.solve(MX.col(j));
    }
    const Eigen::MatrixXd Kr = X.transpose() * (K * X);
    const Eigen::MatrixXd Mr = X.transpose() * (M * X);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(
      0.5 * (Kr + Kr.transpose()), 0.5 * (Mr + Mr.transpose()));
    if (ritz.info() != Eigen::Success)
    {
      throw SolverError("dirichlet_modes: Rayleigh-Ritz step failed");
    }
    X = X * ritz.eigenvectors();
    mu = ritz.eigenvalues();
    converged = true;
    for (int j = 0; j < count; j++)
    {
      const Eigen::VectorXd Mx = M * X.col(j);
      const double res = (K * X.col(j) - mu[j] * Mx).norm() / (mu[j] * Mx.norm());
      if (res > 1e-10)
      {
        converged = false;
        break;
      }
    }
  }
  if (!converged)
  {
    throw SolverError("dirichlet_modes: subspace iteration did not converge");
  }

  std::vector<DirichletMode> modes;
  for (int j = 0; j < count; j++)
  {
    DirichletMode m;
    m.mu = mu[j];
    m.chi = RealVector::Zero(static_cast<Eigen::Index>(dofs.Size()));
    for (Eigen::Index i = 0; i < ni; i++)
    {
      m.chi[interior[static_cast<std::size_t>(i)]] = X(i, j);
    }
    m.mean = dofs.Integral(m.chi);
    Eigen::Index imax;
    m.chi.cwiseAbs().maxCoeff(&imax);
    const double sign = std::abs(m.mean) > 1e-8 * std::sqrt(dofs.Area()) ? m.mean : m.chi[imax];
    if (sign < 0)
    {
      m.chi = -m.chi;
      m.mean = -m.mean;
    }
    modes.push_back(std::move(m));
  }
  return modes;
}

}  // namespace enzres
