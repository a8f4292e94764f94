// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "enzres/design.hpp"
#include "enzres/error.hpp"
#include "oracles.hpp"

using namespace enzres;

namespace
{

const oracle::Disk &Ref()
{
  static const oracle::Disk ref(9.0);
  return ref;
}

struct Solved
{
  DesignProblem prob;
  DesignState state;
};

const Solved &Disk(double h)
{
  static std::map<double, Solved> cache;
  auto it = cache.find(h);
  if (it == cache.end())
  {
    DesignProblem prob = MakeDiskDesignProblem(h, 2.0, 9.0);
    DesignState state = OptimizeDesign(prob);
    it = cache.emplace(h, Solved{std::move(prob), std::move(state)}).first;
  }
  return it->second;
}

Point NodeOf(const DesignProblem &prob, std::size_t i)
{
  return prob.Dofs().GetMesh().Nodes()[static_cast<std::size_t>(prob.Dofs().Global(i))];
}

// φ1 in the gauge φ1(r0) = 0, extended by zero beyond r0.
RealVector OracleW(const DesignProblem &prob)
{
  RealVector w(static_cast<Eigen::Index>(prob.Dofs().Size()));
  for (std::size_t i = 0; i < prob.Dofs().Size(); i++)
  {
    const Point p = NodeOf(prob, i);
    const double r = std::hypot(p.x, p.y);
    w[static_cast<Eigen::Index>(i)] = r < Ref().r0 ? Ref().Phi1(r) - Ref().Phi1(Ref().r0) : 0.0;
  }
  return w;
}

// ∫ over elements with centroid radius below r0 − h of |∇w − ∇φ1|², and the
// oracle seminorm over the same set.
std::pair<double, double> SeminormError(const DesignProblem &prob, const RealVector &w, double h)
{
  const auto &ref = Ref();
  double err = 0.0, norm = 0.0;
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const Point c = prob.Centroid(e);
    const double r = std::hypot(c.x, c.y);
    if (r > ref.r0 - h)
    {
      continue;
    }
    std::array<Point, 3> v;
    Eigen::Vector3d we;
    for (int k = 0; k < 3; k++)
    {
      v[k] = NodeOf(prob, static_cast<std::size_t>(prob.ElementDofs(e)[k]));
      we[k] = w[prob.ElementDofs(e)[k]];
    }
    const double det = (v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y);
    const double gx = ((we[1] - we[0]) * (v[2].y - v[0].y) - (we[2] - we[0]) * (v[1].y - v[0].y)) / det;
    const double gy = ((we[2] - we[0]) * (v[1].x - v[0].x) - (we[1] - we[0]) * (v[2].x - v[0].x)) / det;
    const double dr = ref.c / r - ref.lambda0 * r / 2;
    const double ox = dr * c.x / r, oy = dr * c.y / r;
    const double a = prob.ElementAreas()[e];
    err += a * ((gx - ox) * (gx - ox) + (gy - oy) * (gy - oy));
    norm += a * (ox * ox + oy * oy);
  }
  return {std::sqrt(err), std::sqrt(norm)};
}

}  // namespace

TEST_CASE("energy density")
{
  const DesignProblem &prob = Disk(0.05).prob;
  const auto n = static_cast<Eigen::Index>(prob.Dofs().Size());
  CHECK(EnergyDensity(prob, RealVector::Zero(n)).cwiseAbs().maxCoeff() == 0.0);

  RealVector lin(n);
  for (Eigen::Index i = 0; i < n; i++)
  {
    const Point p = NodeOf(prob, static_cast<std::size_t>(i));
    lin[i] = 0.6 * p.x - 0.8 * p.y;
  }
  const RealVector dl = EnergyDensity(prob, lin);
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const auto &dofs = prob.ElementDofs(e);
    const double mean = (lin[dofs[0]] + lin[dofs[1]] + lin[dofs[2]]) / 3;
    CHECK(dl[static_cast<Eigen::Index>(e)] == doctest::Approx(0.5 - 9.0 * mean).epsilon(1e-12));
  }

  // Density of φ1 is ½|φ1′|² − λ0φ1 > 0 on the oracle annulus.
  const RealVector phi = OracleW(prob);
  const RealVector d = EnergyDensity(prob, phi);
  int checked = 0;
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    const Point c = prob.Centroid(e);
    const double r = std::hypot(c.x, c.y);
    if (r < Ref().r0 - 0.05)
    {
      CHECK(d[static_cast<Eigen::Index>(e)] > 0.0);
      checked++;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("smoothed plus and dual objective")
{
  for (double x : {-3.0, -1e-3, 0.0, 1e-3, 2.0})
  {
    CAPTURE(x);
    CHECK(SmoothPlus(x, 0.0) == std::max(x, 0.0));
    for (double beta : {1e-1, 1e-4})
    {
      const double p = SmoothPlus(x, beta);
      CHECK(p >= std::max(x, 0.0));
      CHECK(p - std::max(x, 0.0) <= beta / 2 * (1 + 1e-12));
    }
  }
  CHECK(SmoothPlus(-1e8, 1.0) == doctest::Approx(0.25e-8).epsilon(1e-10));

  const DesignProblem &prob = Disk(0.05).prob;
  const auto n = static_cast<Eigen::Index>(prob.Dofs().Size());
  CHECK(DualObjective(prob, RealVector::Zero(n)) == 0.0);
  CHECK(DualObjective(prob, RealVector::Constant(n, 1.0)) > 0.0);
  CHECK(DualObjective(prob, RealVector::Constant(n, -1.0)) > 0.0);
  const double area = prob.Area(), f1 = prob.FTotal(), l0 = prob.Lambda0();
  CHECK(DualObjective(prob, RealVector::Constant(n, -1.0)) ==
        doctest::Approx(l0 * area - f1).epsilon(1e-12));
  CHECK(DualObjective(prob, RealVector::Constant(n, 1.0)) == doctest::Approx(f1).epsilon(1e-12));
}

TEST_CASE("bathtub projection")
{
  const std::vector<double> ones{1, 1, 1};
  Bathtub b = BathtubProjection(RealVector{{3, 2, 1}}, ones, 1.0);
  CHECK(b.theta == RealVector{{1, 0, 0}});
  CHECK(b.z0 >= 2.0);
  CHECK(b.z0 < 3.0);

  b = BathtubProjection(RealVector{{2, 2, 1}}, ones, 1.5);
  CHECK(b.theta == RealVector{{0.75, 0.75, 0}});

  b = BathtubProjection(RealVector{{2, 2, 1}}, {1.0, 3.0, 1.0}, 2.0);
  CHECK(b.theta[0] == doctest::Approx(0.5));
  CHECK(b.theta[1] == doctest::Approx(0.5));

  b = BathtubProjection(RealVector{{3, 2, 1}}, ones, 3.0);
  CHECK(b.theta == RealVector{{1, 1, 1}});
  CHECK_THROWS_AS(BathtubProjection(RealVector{{3, 2, 1}}, ones, 3.5), ValidationError);

  const DesignProblem &prob = Disk(0.05).prob;
  const RealVector d = EnergyDensity(prob, OracleW(prob));
  const Bathtub bt = BathtubProjection(d, prob.ElementAreas(), prob.A0());
  double area = 0.0;
  for (std::size_t e = 0; e < prob.NumElements(); e++)
  {
    area += bt.theta[static_cast<Eigen::Index>(e)] * prob.ElementAreas()[e];
  }
  CHECK(std::abs(prob.Lambda0() * area - prob.FTotal()) <= 1e-12 * prob.FTotal());
}

TEST_CASE("problem validation")
{
  const DesignProblem &prob = Disk(0.05).prob;
  CHECK_THROWS_AS(DesignProblem(prob.Dofs().MeshPtr(), 9.0, prob.F().Scaled(-1.0)), ValidationError);
  CHECK_THROWS_AS(DesignProblem(prob.Dofs().MeshPtr(), 0.0, prob.F()), ValidationError);
  CHECK_THROWS_AS(MakeDiskDesignProblem(0.05, 1.2, 9.0), ValidationError);
}

TEST_CASE("dual minimizer against the annulus oracle")
{
  const Solved &s = Disk(0.05);
  CHECK(DualObjective(s.prob, s.state.w) <= DualObjective(s.prob, OracleW(s.prob)));

  const auto [err, norm] = SeminormError(s.prob, s.state.w, 0.05);
  CHECK(err <= 0.1 * norm);

  // Beyond the optimal interface the minimizer is not unique: any w with
  // nonpositive density there is optimal. Check that the representative
  // extended by zero is optimal too and that w̄ is O(h) on the interface.
  const RealVector d = EnergyDensity(s.prob, s.state.w);
  for (std::size_t e = 0; e < s.prob.NumElements(); e++)
  {
    const Point c = s.prob.Centroid(e);
    if (std::hypot(c.x, c.y) > Ref().r0 + 0.1)
    {
      CHECK(d[static_cast<Eigen::Index>(e)] <= 0.0);
    }
  }
  RealVector cut = s.state.w;
  double interface = 0.0;
  for (std::size_t i = 0; i < s.prob.Dofs().Size(); i++)
  {
    const Point p = NodeOf(s.prob, i);
    const double r = std::hypot(p.x, p.y);
    const auto k = static_cast<Eigen::Index>(i);
    if (std::abs(r - Ref().r0) < 0.05)
    {
      interface = std::max(interface, std::abs(cut[k]));
    }
    if (r > Ref().r0)
    {
      cut[k] = 0.0;
    }
  }
  CHECK(interface <= 0.05 * s.state.w.cwiseAbs().maxCoeff());
  const double full = DualObjective(s.prob, s.state.w);
  CHECK(DualObjective(s.prob, cut) - full <= 1e-3 * std::abs(full));
}

TEST_CASE("zero source gives the zero minimizer")
{
  const DesignProblem &prob = Disk(0.05).prob;
  const DesignProblem zero(prob.Dofs().MeshPtr(), 9.0, prob.F().Scaled(0.0));
  const DualResult res = MinimizeDual(zero);
  CHECK(res.w.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(DualObjective(zero, res.w) <= 1e-12);
}

TEST_CASE("seminorm error decreases with h")
{
  const double e1 = SeminormError(Disk(0.1).prob, Disk(0.1).state.w, 0.1).first;
  const double e2 = SeminormError(Disk(0.05).prob, Disk(0.05).state.w, 0.05).first;
  CHECK(e1 / e2 >= 1.5);
}

TEST_CASE("dual route on the disk")
{
  const Solved &s = Disk(0.05);
  CHECK(s.state.converged);
  CHECK(std::abs(s.state.dual - s.state.primal) <= 1e-6 * std::abs(s.state.dual));
  REQUIRE(!s.state.history.empty());
  for (const auto &rec : s.state.history)
  {
    CHECK(rec.primal <= rec.dual * (1 - 1e-13) + 1e-13);
  }
  double area = 0.0;
  for (std::size_t e = 0; e < s.prob.NumElements(); e++)
  {
    area += s.state.theta[static_cast<Eigen::Index>(e)] * s.prob.ElementAreas()[e];
  }
  CHECK(std::abs(s.prob.Lambda0() * area - s.prob.FTotal()) <= 1e-12 * s.prob.FTotal());
  CHECK(s.state.theta.minCoeff() >= 0.0);
  CHECK(s.state.theta.maxCoeff() <= 1.0);

  const RealVector d = EnergyDensity(s.prob, s.state.w);
  const double comp = Complementarity(s.prob, s.state.theta_shape, d, s.state.z0);
  CHECK(comp <= 1e-6 * std::abs(s.state.dual));

  const double r0 = Ref().r0;
  const double sym = SymmetricDifference(s.prob, s.state.theta, [r0](double x, double y) {
    return std::hypot(x, y) < r0;
  });
  CHECK(sym <= 0.05 * s.prob.A0());
}

TEST_CASE("lambda1 of the optimal design")
{
  const Solved &s = Disk(0.05);
  const double l1 = Lambda1OfDesign(s.state, s.prob);
  CHECK(l1 < 0.0);
  CHECK(std::abs(l1 - Ref().lambda1) <= 0.02 * std::abs(Ref().lambda1));

  const double r0 = Ref().r0;
  const std::vector<std::function<double(double, double)>> perturbed = {
    [r0](double x, double y) { return -std::abs(std::hypot(x, y) - (r0 + 0.1)); },
    [](double x, double y) { return -std::hypot(x - 0.1, y); },
  };
  for (const auto &level : perturbed)
  {
    const RealVector theta = LevelSetDesign(s.prob, level);
    const double value = PrimalValue(s.prob, theta);
    CHECK(std::abs(Lambda1OfValue(s.prob, value)) > std::abs(l1));
  }
}

TEST_CASE("saddle cross-check")
{
  const Solved &s = Disk(0.05);
  SaddleOptions opts;
  opts.iterations = 20;
  const DesignState sd = SaddleSolve(s.prob, opts);
  for (const auto &rec : sd.history)
  {
    CHECK(rec.primal <= rec.dual * (1 - 1e-13) + 1e-13);
  }
  CHECK(sd.primal <= s.state.dual * (1 - 1e-9));
  CHECK(sd.dual >= s.state.primal * (1 + 1e-9));
  CHECK(sd.theta.minCoeff() >= 0.0);
  CHECK(sd.theta.maxCoeff() <= 1.0);
}

TEST_CASE("enlarging B leaves the saddle value unchanged")
{
  const Solved &s = Disk(0.05);
  const DesignProblem big = MakeDiskDesignProblem(0.05, 2.5, 9.0);
  const DesignState st = OptimizeDesign(big);
  CHECK(st.dual == doctest::Approx(s.state.dual).epsilon(1e-3));
  double slack = 0.0;
  for (std::size_t e = 0; e < big.NumElements(); e++)
  {
    const Point c = big.Centroid(e);
    if (std::hypot(c.x, c.y) > 2.0)
    {
      slack += st.theta[static_cast<Eigen::Index>(e)] * big.ElementAreas()[e];
    }
  }
  CHECK(slack <= 1e-10 * big.A0());
}

TEST_CASE("design CSV")
{
  const Solved &s = Disk(0.05);
  std::ostringstream out;
  WriteDesignCsv(s.prob, s.state, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "centroid_x,centroid_y,theta,density");
  std::size_t rows = 0;
  while (std::getline(in, line))
  {
    rows++;
  }
  CHECK(rows == s.prob.NumElements());
}
