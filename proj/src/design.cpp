// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include "enzres/design.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "enzres/error.hpp"

namespace enzres
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

// p_β, p_β' and p_β'' written to avoid cancellation for x ≪ −β.
struct Plus
{
  double p, dp, ddp;
};

Plus SmoothPlusAll(double x, double beta)
{
  if (beta == 0.0)
  {
    return {std::max(x, 0.0), x > 0.0 ? 1.0 : 0.0, 0.0};
  }
  const double s = std::hypot(x, beta);
  Plus out;
  if (x >= 0.0)
  {
    out.p = 0.5 * (x + s);
    out.dp = 0.5 * (1.0 + x / s);
  }
  else
  {
    const double sx = beta * beta / (s - x);  // x + s
    out.p = 0.5 * sx;
    out.dp = 0.5 * sx / s;
  }
  out.ddp = 0.5 * beta * beta / (s * s * s);
  return out;
}

Eigen::Vector3d Gather(const DesignProblem &prob, std::size_t e, const RealVector &w)
{
  const auto &d = prob.ElementDofs(e);
  return {w[d[0]], w[d[1]], w[d[2]]};
}

class UnionFind
{
public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t Find(std::size_t i)
  {
    while (parent_[i] != i)
    {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  void Unite(std::size_t a, std::size_t b) { parent_[Find(a)] = Find(b); }

private:
  std::vector<std::size_t> parent_;
};

// Weighted stiffness Σ c_e K_e and load b = λ0 Σ θ_e A_e/3 − f.
void AssembleWeighted(const DesignProblem &prob, const RealVector &conductivity,
                      const RealVector &theta, SparseMatrix<double> &K, RealVector &b)
{
  const auto n = static_cast<Eigen::Index>(prob.Dofs().Size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * prob.NumElements());
  b = -prob.FVector();
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const auto &d = prob.ElementDofs(e);
    const auto &ke = prob.ElementStiffness(e);
    for (int i = 0; i < 3; i++)
    {
      b[d[i]] += prob.Lambda0() * theta[static_cast<Eigen::Index>(e)] * prob.ElementAreas()[e] / 3.0;
      for (int j = 0; j < 3; j++)
      {
        trips.emplace_back(d[i], d[j], conductivity[static_cast<Eigen::Index>(e)] * ke(i, j));
      }
    }
  }
  K.resize(n, n);
  K.setFromTriplets(trips.begin(), trips.end());
  K.makeCompressed();
}

// Minimizer of ½wᵀKw − bᵀw with w pinned to zero at one node; K must be
// singular only in the constants and b compatible.
RealVector SolvePinned(const SparseMatrix<double> &K, const RealVector &b, int pin)
{
  const auto n = K.rows();
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; i++)
  {
    if (i != pin)
    {
      keep.push_back(static_cast<int>(i));
    }
  }
  SparseMatrix<double> P(static_cast<Eigen::Index>(keep.size()), n);
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t i = 0; i < keep.size(); i++)
  {
    trips.emplace_back(static_cast<int>(i), keep[i], 1.0);
  }
  P.setFromTriplets(trips.begin(), trips.end());
  const SparseMatrix<double> Kr = P * K * P.transpose();
  Eigen::SimplicialLDLT<SparseMatrix<double>> ldlt(Kr);
  if (ldlt.info() != Eigen::Success)
  {
    throw SolverError("design: pinned stiffness factorization failed");
  }
  const RealVector wr = ldlt.solve(P * b);
  return P.transpose() * wr;
}

}  // namespace

DesignProblem::DesignProblem(std::shared_ptr<const Mesh> mesh, double lambda0,
                             BoundaryFunctional f, std::optional<double> psi_d_sq)
  : lambda0_(lambda0), f_(std::move(f)), psi_d_sq_(psi_d_sq)
{
  if (!(lambda0 > 0.0))
  {
    throw ValidationError("design: lambda0 must be positive");
  }
  dofs_ = std::make_shared<DofMap>(mesh, std::set<int>{kShellRegion, kSlackRegion});
  f_vec_ = f_.Scatter(*dofs_);
  f_total_ = f_.Total();
  const bool f_zero = f_vec_.isZero(0.0);
  if (!(f_total_ > 0.0) && !f_zero)
  {
    throw ValidationError("design: the boundary source must have positive total <f, 1>");
  }

  const Mesh &m = dofs_->GetMesh();
  area_ = 0.0;
  double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
  for (auto t : dofs_->TriangleIndices())
  {
    const auto &tri = m.Triangles()[t];
    const double a = m.TriangleArea(t);
    std::array<int, 3> d;
    Eigen::Matrix3d ke;
    std::array<double, 3> bb, cc;
    for (int i = 0; i < 3; i++)
    {
      d[i] = dofs_->Local(tri.v[i]);
      const auto &pj = m.Nodes()[tri.v[(i + 1) % 3]], &pk = m.Nodes()[tri.v[(i + 2) % 3]];
      bb[i] = pj.y - pk.y;
      cc[i] = pk.x - pj.x;
      const auto &p = m.Nodes()[tri.v[i]];
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    for (int i = 0; i < 3; i++)
    {
      for (int j = 0; j < 3; j++)
      {
        ke(i, j) = (bb[i] * bb[j] + cc[i] * cc[j]) / (4.0 * a);
      }
    }
    areas_.push_back(a);
    elem_dofs_.push_back(d);
    elem_k_.push_back(ke);
    area_ += a;
  }
  diameter_ = std::hypot(xmax - xmin, ymax - ymin);
  if (!(area_ > A0()))
  {
    throw ValidationError("design: B is too small, |B \\ D| must exceed <f, 1>/lambda0");
  }
  K_ = AssembleStiffness(*dofs_, std::map<int, double>{{kShellRegion, 1.0}, {kSlackRegion, 1.0}});
  M_ = AssembleMass(*dofs_, std::map<int, double>{{kShellRegion, 1.0}, {kSlackRegion, 1.0}});
}

Point DesignProblem::Centroid(std::size_t e) const
{
  const Mesh &m = dofs_->GetMesh();
  const auto &tri = m.Triangles()[dofs_->TriangleIndices()[e]];
  Point c;
  for (int i = 0; i < 3; i++)
  {
    c.x += m.Nodes()[tri.v[i]].x / 3.0;
    c.y += m.Nodes()[tri.v[i]].y / 3.0;
  }
  return c;
}

DesignProblem MakeDesignProblem(std::shared_ptr<const Mesh> mesh, double lambda0)
{
  auto core = std::make_shared<DofMap>(mesh, std::set<int>{kCoreRegion});
  DirichletHelmholtzSolver solver(core, lambda0);
  const auto n = static_cast<Eigen::Index>(core->Size());
  const RealVector psi = solver.Solve(RealVector::Zero(n), RealVector::Ones(n));
  BoundaryFunctional f = WeakNormalFlux(*core, psi, lambda0, RealVector::Zero(n));
  const double psi_sq = psi.dot(AssembleMass(*core) * psi);
  return DesignProblem(std::move(mesh), lambda0, std::move(f), psi_sq);
}

DesignProblem MakeDiskDesignProblem(double h, double r_box, double lambda0)
{
  auto mesh = std::make_shared<const Mesh>(BuildConcentricMesh({1.0, r_box, std::nullopt, h}));
  return MakeDesignProblem(std::move(mesh), lambda0);
}

RealVector EnergyDensity(const DesignProblem &prob, const RealVector &w)
{
  RealVector d(static_cast<Eigen::Index>(prob.NumElements()));
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const Eigen::Vector3d we = Gather(prob, e, w);
    const double grad2 = we.dot(prob.ElementStiffness(e) * we) / prob.ElementAreas()[e];
    d[static_cast<Eigen::Index>(e)] = 0.5 * grad2 - prob.Lambda0() * we.sum() / 3.0;
  }
  return d;
}

double SmoothPlus(double x, double beta)
{
  return SmoothPlusAll(x, beta).p;
}

double DualObjective(const DesignProblem &prob, const RealVector &w, double beta)
{
  const RealVector d = EnergyDensity(prob, w);
  double sum = prob.FVector().dot(w);
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    sum += prob.ElementAreas()[e] * SmoothPlusAll(d[static_cast<Eigen::Index>(e)], beta).p;
  }
  return sum;
}

double Lagrangian(const DesignProblem &prob, const RealVector &w, const RealVector &theta)
{
  const RealVector d = EnergyDensity(prob, w);
  double sum = prob.FVector().dot(w);
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const auto i = static_cast<Eigen::Index>(e);
    sum += prob.ElementAreas()[e] * theta[i] * d[i];
  }
  return sum;
}

Bathtub BathtubProjection(const RealVector &density, const std::vector<double> &areas, double A0)
{
  const std::size_t n = areas.size();
  if (static_cast<std::size_t>(density.size()) != n)
  {
    throw ValidationError("bathtub: density and area sizes differ");
  }
  const double total = std::accumulate(areas.begin(), areas.end(), 0.0);
  if (A0 < 0.0 || A0 > total * (1.0 + 1e-12))
  {
    throw ValidationError("bathtub: target area outside [0, total area]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return density[static_cast<Eigen::Index>(a)] > density[static_cast<Eigen::Index>(b)];
  });

  Bathtub out;
  out.theta = RealVector::Zero(static_cast<Eigen::Index>(n));
  out.z0 = n ? density[static_cast<Eigen::Index>(order.back())] : 0.0;
  double filled = 0.0;
  std::size_t i = 0;
  while (i < n)
  {
    // Group of equal densities.
    std::size_t j = i;
    double group_area = 0.0;
    const double level = density[static_cast<Eigen::Index>(order[i])];
    while (j < n && density[static_cast<Eigen::Index>(order[j])] == level)
    {
      group_area += areas[order[j]];
      j++;
    }
    if (filled + group_area <= A0)
    {
      for (std::size_t k = i; k < j; k++)
      {
        out.theta[static_cast<Eigen::Index>(order[k])] = 1.0;
      }
      filled += group_area;
      i = j;
      continue;
    }
    const double frac = (A0 - filled) / group_area;
    for (std::size_t k = i; k < j; k++)
    {
      out.theta[static_cast<Eigen::Index>(order[k])] = frac;
    }
    out.z0 = level;
    break;
  }
  return out;
}

double PrimalValue(const DesignProblem &prob, const RealVector &theta)
{
  const auto n = static_cast<Eigen::Index>(prob.Dofs().Size());
  UnionFind uf(static_cast<std::size_t>(n));
  std::vector<bool> supported(static_cast<std::size_t>(n), false);
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const double t = theta[static_cast<Eigen::Index>(e)];
    if (t < 0.0 || t > 1.0)
    {
      throw ValidationError("primal value: densities must lie in [0, 1]");
    }
    if (t > 0.0)
    {
      const auto &d = prob.ElementDofs(e);
      for (int k = 0; k < 3; k++)
      {
        supported[d[k]] = true;
      }
      uf.Unite(d[0], d[1]);
      uf.Unite(d[0], d[2]);
    }
  }
  const RealVector &f = prob.FVector();
  for (Eigen::Index i = 0; i < n; i++)
  {
    if (!supported[i] && f[i] != 0.0)
    {
      return -kInf;
    }
  }
  // Compatibility per connected component of the support.
  std::vector<double> load(static_cast<std::size_t>(n), 0.0);
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const double t = theta[static_cast<Eigen::Index>(e)];
    if (t > 0.0)
    {
      load[uf.Find(prob.ElementDofs(e)[0])] += prob.Lambda0() * t * prob.ElementAreas()[e];
    }
  }
  for (Eigen::Index i = 0; i < n; i++)
  {
    load[uf.Find(i)] -= f[i];
  }
  const double scale = std::max(prob.FTotal(), 1e-300);
  for (Eigen::Index i = 0; i < n; i++)
  {
    if (supported[i] && uf.Find(i) == static_cast<std::size_t>(i) &&
        std::abs(load[i]) > 1e-9 * scale)
    {
      return -kInf;
    }
  }

  // Unsupported nodes and one node per component are pinned at zero.
  std::vector<int> keep;
  std::vector<bool> root_pinned(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; i++)
  {
    if (!supported[i])
    {
      continue;
    }
    const auto r = uf.Find(i);
    if (!root_pinned[r])
    {
      root_pinned[r] = true;
      continue;
    }
    keep.push_back(static_cast<int>(i));
  }
  SparseMatrix<double> K;
  RealVector b;
  AssembleWeighted(prob, theta, theta, K, b);
  if (keep.empty())
  {
    return 0.0;
  }
  SparseMatrix<double> P(static_cast<Eigen::Index>(keep.size()), n);
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t i = 0; i < keep.size(); i++)
  {
    trips.emplace_back(static_cast<int>(i), keep[i], 1.0);
  }
  P.setFromTriplets(trips.begin(), trips.end());
  const SparseMatrix<double> Kr = P * K * P.transpose();
  const RealVector br = P * b;
  Eigen::SimplicialLDLT<SparseMatrix<double>> ldlt(Kr);
  RealVector wr;
  if (ldlt.info() == Eigen::Success)
  {
    wr = ldlt.solve(br);
  }
  if (ldlt.info() != Eigen::Success || !wr.allFinite())
  {
    wr = LinearSolve<double>(Kr, br);
  }
  return -0.5 * br.dot(wr);
}

DualResult MinimizeDual(const DesignProblem &prob, const DualOptions &opts,
                        const std::function<void(const DualResult &)> &on_level)
{
  const auto n = static_cast<Eigen::Index>(prob.Dofs().Size());
  DualResult res;
  res.w = RealVector::Zero(n);
  res.theta = RealVector::Zero(static_cast<Eigen::Index>(prob.NumElements()));
  if (prob.FVector().isZero(0.0))
  {
    // J ≥ 0 everywhere and J(0) = 0.
    return res;
  }

  const double scale = prob.Lambda0() * prob.Diameter() * prob.Diameter();
  const double beta_min = opts.beta_tol * scale;
  const double tol = opts.tol * std::max(1.0, prob.FTotal());
  const SparseMatrix<double> &M = prob.Mass();
  Eigen::SimplicialLDLT<SparseMatrix<double>> riesz(SparseMatrix<double>(prob.Stiffness() + M));

  const std::size_t ne = prob.NumElements();
  std::vector<Plus> pl(ne);
  std::vector<Eigen::Vector3d> g(ne);
  auto evaluate = [&](const RealVector &w, double beta, RealVector *grad) {
    double J = prob.FVector().dot(w);
    if (grad)
    {
      *grad = prob.FVector();
    }
    for (std::size_t e = 0; e < ne; e++)
    {
      const Eigen::Vector3d we = Gather(prob, e, w);
      const double a = prob.ElementAreas()[e];
      const Eigen::Vector3d kw = prob.ElementStiffness(e) * we;
      const double d = 0.5 * we.dot(kw) / a - prob.Lambda0() * we.sum() / 3.0;
      pl[e] = SmoothPlusAll(d, beta);
      J += a * pl[e].p;
      if (grad)
      {
        g[e] = kw - Eigen::Vector3d::Constant(prob.Lambda0() * a / 3.0);
        const auto &dd = prob.ElementDofs(e);
        for (int k = 0; k < 3; k++)
        {
          (*grad)[dd[k]] += pl[e].dp * g[e][k];
        }
      }
    }
    return J;
  };

  Eigen::SimplicialLDLT<SparseMatrix<double>> ldlt;
  bool analyzed = false;
  double beta = opts.beta_start * scale;
  double mu = 1e-4;
  const double mu_min = 1e-12;
  while (true)
  {
    int steps = 0;
    RealVector grad;
    double J = evaluate(res.w, beta, &grad);
    while (true)
    {
      res.stationarity = std::sqrt(std::max(0.0, grad.dot(riesz.solve(grad))));
      if (res.stationarity <= tol)
      {
        break;
      }
      if (steps >= opts.max_newton)
      {
        std::ostringstream msg;
        msg << "minimize_dual: no convergence at beta = " << beta << " (gradient norm "
            << res.stationarity << ")";
        throw SolverError(msg.str());
      }
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(9 * ne);
      for (std::size_t e = 0; e < ne; e++)
      {
        const auto &dd = prob.ElementDofs(e);
        const Eigen::Matrix3d he = pl[e].dp * prob.ElementStiffness(e) +
                                   (pl[e].ddp / prob.ElementAreas()[e]) * g[e] * g[e].transpose();
        for (int i = 0; i < 3; i++)
        {
          for (int j = 0; j < 3; j++)
          {
            trips.emplace_back(dd[i], dd[j], he(i, j));
          }
        }
      }
      SparseMatrix<double> H(n, n);
      H.setFromTriplets(trips.begin(), trips.end());

      bool accepted = false;
      for (int attempt = 0; attempt < 12 && !accepted; attempt++)
      {
        SparseMatrix<double> A = H + mu * M;
        if (!analyzed)
        {
          ldlt.analyzePattern(A);
          analyzed = true;
        }
        ldlt.factorize(A);
        RealVector step;
        if (ldlt.info() == Eigen::Success)
        {
          step = -ldlt.solve(grad);
        }
        if (ldlt.info() != Eigen::Success || !step.allFinite() || grad.dot(step) >= 0.0)
        {
          mu *= 100.0;
          continue;
        }
        const double slope = grad.dot(step);
        double alpha = 1.0;
        for (int ls = 0; ls < 40; ls++)
        {
          const RealVector trial = res.w + alpha * step;
          const double Jt = evaluate(trial, beta, nullptr);
          bool ok = Jt <= J + 1e-4 * alpha * slope;
          if (!ok && Jt <= J + 1e-13 * std::abs(J))
          {
            // J is flat to roundoff: accept on a decrease of the gradient norm.
            RealVector gt;
            evaluate(trial, beta, &gt);
            ok = gt.dot(riesz.solve(gt)) < grad.dot(riesz.solve(grad));
          }
          if (ok)
          {
            res.w = trial;
            accepted = true;
            break;
          }
          alpha *= 0.5;
        }
        if (!accepted)
        {
          // Roundoff floor: no decrease achievable along a descent direction.
          if (std::abs(slope) <= 1e-14 * (std::abs(J) + 1.0))
          {
            break;
          }
          mu *= 100.0;
        }
        else
        {
          mu = alpha == 1.0 ? std::max(mu * 0.1, mu_min) : mu * 10.0;
        }
      }
      steps++;
      res.newton_steps++;
      J = evaluate(res.w, beta, &grad);
      if (!accepted)
      {
        res.stationarity = std::sqrt(std::max(0.0, grad.dot(riesz.solve(grad))));
        if (res.stationarity <= 1e3 * tol)
        {
          break;
        }
        std::ostringstream msg;
        msg << "minimize_dual: line search failed at beta = " << beta << " (gradient norm "
            << res.stationarity << ")";
        throw SolverError(msg.str());
      }
    }
    res.beta = beta;
    for (std::size_t e = 0; e < ne; e++)
    {
      res.theta[static_cast<Eigen::Index>(e)] = pl[e].dp;
    }
    if (on_level)
    {
      on_level(res);
    }
    if (beta <= beta_min)
    {
      break;
    }
    beta = std::max(0.5 * beta, beta_min);
  }
  return res;
}

DualResult MinimizeDual(const DesignProblem &prob, const DualOptions &opts)
{
  return MinimizeDual(prob, opts, nullptr);
}

namespace
{

// Moves θ toward 1 or 0 by the smallest uniform relative amount that makes
// the area exactly A0.
RealVector CorrectArea(const DesignProblem &prob, RealVector theta)
{
  const auto &areas = prob.ElementAreas();
  double cur = 0.0, free = 0.0;
  for (std::size_t e = 0; e < areas.size(); e++)
  {
    const double t = theta[static_cast<Eigen::Index>(e)];
    cur += areas[e] * t;
    free += areas[e] * (1.0 - t);
  }
  const double target = prob.A0();
  if (cur < target)
  {
    const double t = (target - cur) / free;
    theta.array() += t * (1.0 - theta.array());
  }
  else if (cur > target)
  {
    theta *= target / cur;
  }
  return theta.cwiseMax(0.0).cwiseMin(1.0);
}

double FractionalArea(const DesignProblem &prob, const RealVector &theta)
{
  double a = 0.0;
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const double t = theta[static_cast<Eigen::Index>(e)];
    if (t > 0.01 && t < 0.99)
    {
      a += prob.ElementAreas()[e];
    }
  }
  return a;
}

}  // namespace

DesignState OptimizeDesign(const DesignProblem &prob, const DualOptions &opts, double gap_tol)
{
  if (!(prob.FTotal() > 0.0))
  {
    throw ValidationError("optimize: the boundary source must have positive total <f, 1>");
  }
  DesignState state;
  const DualResult res = MinimizeDual(prob, opts, [&](const DualResult &level) {
    const RealVector theta = CorrectArea(prob, level.theta);
    state.history.push_back({PrimalValue(prob, theta), DualObjective(prob, level.w)});
  });
  state.w = res.w;
  state.theta = CorrectArea(prob, res.theta);
  state.primal = state.history.back().primal;
  state.dual = state.history.back().dual;
  const Bathtub bt = BathtubProjection(EnergyDensity(prob, res.w), prob.ElementAreas(), prob.A0());
  state.theta_shape = bt.theta;
  state.z0 = bt.z0;
  state.converged = std::abs(state.dual - state.primal) <= gap_tol * std::abs(state.dual);
  state.fractional_area = FractionalArea(prob, state.theta);
  return state;
}

DesignState SaddleSolve(const DesignProblem &prob, const SaddleOptions &opts)
{
  if (!(prob.FTotal() > 0.0))
  {
    throw ValidationError("saddle_solve: the boundary source must have positive total <f, 1>");
  }
  if (opts.iterations < 1 || !(opts.eps_start > 0.0) || !(opts.eps_end > 0.0))
  {
    throw ValidationError("saddle_solve: need iterations >= 1 and positive eps schedule");
  }
  const auto ne = static_cast<Eigen::Index>(prob.NumElements());
  RealVector theta = RealVector::Constant(ne, prob.A0() / prob.Area());

  auto solve = [&](const RealVector &t, double eps) {
    const RealVector conductivity = t.array() + eps * (1.0 - t.array());
    SparseMatrix<double> K;
    RealVector b;
    AssembleWeighted(prob, conductivity, t, K, b);
    return SolvePinned(K, b, 0);
  };
  // Derivative of the regularized primal value along θ + τΔ.
  auto slope = [&](const RealVector &t, const RealVector &delta, double eps) {
    const RealVector w = solve(t, eps);
    const RealVector d = EnergyDensity(prob, w);
    double sum = 0.0;
    for (std::size_t e = 0; e < prob.NumElements(); e++)
    {
      const auto i = static_cast<Eigen::Index>(e);
      const Eigen::Vector3d we = Gather(prob, e, w);
      const double grad2 = we.dot(prob.ElementStiffness(e) * we) / prob.ElementAreas()[e];
      sum += prob.ElementAreas()[e] * delta[i] * (d[i] - 0.5 * eps * grad2);
    }
    return sum;
  };

  DesignState best;
  double best_gap = kInf;
  std::vector<DesignRecord> history;
  for (int k = 0; k < opts.iterations; k++)
  {
    const double s = opts.iterations == 1 ? 1.0 : static_cast<double>(k) / (opts.iterations - 1);
    const double eps = opts.eps_start * std::pow(opts.eps_end / opts.eps_start, s);
    RealVector w = solve(theta, eps);

    const Bathtub bt = BathtubProjection(EnergyDensity(prob, w), prob.ElementAreas(), prob.A0());
    w.array() += bt.z0 / prob.Lambda0();
    const double primal = PrimalValue(prob, theta);
    const double dual = DualObjective(prob, w);
    history.push_back({primal, dual});
    const double gap = dual - primal;
    if (gap < best_gap)
    {
      best_gap = gap;
      best.theta = theta;
      best.w = w;
      best.primal = primal;
      best.dual = dual;
      best.theta_shape = bt.theta;
      best.z0 = 0.0;
    }
    if (gap <= opts.tol * std::abs(dual))
    {
      best.converged = true;
      break;
    }
    // Conditional-gradient step: the bathtub is the linear maximizer of the
    // concave map θ ↦ inf_w L(w, θ), and the full step cycles. The step
    // length is found by bisection on the directional derivative.
    const RealVector delta = bt.theta - theta;
    double lo = 0.0, hi = 1.0;
    if (slope(bt.theta, delta, eps) >= 0.0)
    {
      lo = 1.0;
    }
    for (int it = 0; it < opts.line_search && lo < hi; it++)
    {
      const double mid = 0.5 * (lo + hi);
      (slope(theta + mid * delta, delta, eps) >= 0.0 ? lo : hi) = mid;
    }
    theta += 0.5 * (lo + hi) * delta;
  }
  best.history = std::move(history);
  best.fractional_area = FractionalArea(prob, best.theta);
  return best;
}

double Lambda1OfValue(const DesignProblem &prob, double value)
{
  if (!prob.PsiDSquared())
  {
    throw ValidationError("lambda1: design problem has no psi_d normalization");
  }
  return 2.0 * value / (prob.A0() + *prob.PsiDSquared());
}

double Lambda1OfDesign(const DesignState &state, const DesignProblem &prob)
{
  return Lambda1OfValue(prob, state.dual);
}

RealVector LevelSetDesign(const DesignProblem &prob,
                          const std::function<double(double, double)> &level)
{
  RealVector density(static_cast<Eigen::Index>(prob.NumElements()));
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const Point c = prob.Centroid(e);
    density[static_cast<Eigen::Index>(e)] = level(c.x, c.y);
  }
  return BathtubProjection(density, prob.ElementAreas(), prob.A0()).theta;
}

double SymmetricDifference(const DesignProblem &prob, const RealVector &theta,
                           const std::function<bool(double, double)> &inside, int subdiv)
{
  const Mesh &m = prob.Dofs().GetMesh();
  const double n = subdiv;
  double sum = 0.0;
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const auto &tri = m.Triangles()[prob.Dofs().TriangleIndices()[e]];
    const Point &p0 = m.Nodes()[tri.v[0]], &p1 = m.Nodes()[tri.v[1]], &p2 = m.Nodes()[tri.v[2]];
    auto at = [&](double s, double t) {
      return Point{p0.x + s * (p1.x - p0.x) + t * (p2.x - p0.x),
                   p0.y + s * (p1.y - p0.y) + t * (p2.y - p0.y)};
    };
    int hits = 0, total = 0;
    // Centroids of the subdiv² congruent subtriangles.
    for (int i = 0; i < subdiv; i++)
    {
      for (int j = 0; i + j < subdiv; j++)
      {
        const Point up = at((i + 1.0 / 3.0) / n, (j + 1.0 / 3.0) / n);
        hits += inside(up.x, up.y);
        total++;
        if (i + j + 1 < subdiv)
        {
          const Point down = at((i + 2.0 / 3.0) / n, (j + 2.0 / 3.0) / n);
          hits += inside(down.x, down.y);
          total++;
        }
      }
    }
    const double frac = static_cast<double>(hits) / total;
    const double t = theta[static_cast<Eigen::Index>(e)];
    sum += prob.ElementAreas()[e] * (t * (1.0 - frac) + (1.0 - t) * frac);
  }
  return sum;
}

double Complementarity(const DesignProblem &prob, const RealVector &theta,
                       const RealVector &density, double z0)
{
  double sum = 0.0;
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const auto i = static_cast<Eigen::Index>(e);
    const double x = density[i] - z0;
    sum += prob.ElementAreas()[e] *
           (std::abs(theta[i] * std::min(x, 0.0)) + std::abs((1.0 - theta[i]) * std::max(x, 0.0)));
  }
  return sum;
}

void WriteDesignCsv(const DesignProblem &prob, const DesignState &state, std::ostream &out)
{
  const RealVector density = EnergyDensity(prob, state.w);
  auto num = [&out](double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
  };
  out << "centroid_x,centroid_y,theta,density\n";
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const Point c = prob.Centroid(e);
    const auto i = static_cast<Eigen::Index>(e);
    num(c.x);
    out << ',';
    num(c.y);
    out << ',';
    num(state.theta[i]);
    out << ',';
    num(density[i]);
    out << '\n';
  }
}

}  // namespace enzres
