// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance criteria 1-6 against reference values from tests/oracles.hpp.
// Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "enzres/design.hpp"
#include "enzres/dispersion.hpp"
#include "enzres/eigensolver.hpp"
#include "enzres/mesh.hpp"
#include "enzres/perturbation.hpp"
#include "oracles.hpp"

using namespace enzres;

namespace
{

const std::vector<double> kLevels{0.08, 0.04, 0.02};

struct Criterion
{
  int id;
  std::string name;
  bool pass = true;
  std::ostringstream detail;

  void Require(bool ok, const std::string &what, double value)
  {
    pass = pass && ok;
    detail << (detail.tellp() > 0 ? "; " : "") << what << ' ' << value << (ok ? "" : " (FAIL)");
  }
};

struct Level
{
  std::shared_ptr<const CoreShell> cs;
  double lambda0 = 0.0;
};

struct DesignRun
{
  std::shared_ptr<const DesignProblem> prob;
  DesignState state;
};

double Relative(double a, double b)
{
  return std::abs(a - b) / std::abs(b);
}

double AbsRatio(double num, double den)
{
  return den == 0.0 ? (num == 0.0 ? 0.0 : HUGE_VAL) : std::abs(num) / den;
}

}  // namespace

int main()
{
  const oracle::Disk ref(9.0);
  std::vector<Criterion> out;
  auto criterion = [&out](int id, const char *name) -> Criterion & {
    out.push_back(Criterion{id, name, true, {}});
    return out.back();
  };
  out.reserve(6);

  std::vector<std::future<Level>> level_jobs;
  std::vector<std::future<DesignRun>> design_jobs;
  for (double h : kLevels)
  {
    level_jobs.push_back(std::async(std::launch::async, [h, &ref] {
      auto mesh = std::make_shared<const Mesh>(BuildConcentricMesh({1.0, ref.r0, std::nullopt, h}));
      auto cs = std::make_shared<const CoreShell>(mesh);
      return Level{cs, FindLambda0(*cs, 6.0, 14.0)};
    }));
    design_jobs.push_back(std::async(std::launch::async, [h] {
      auto prob = std::make_shared<const DesignProblem>(MakeDiskDesignProblem(h, 2.0, 9.0));
      return DesignRun{prob, OptimizeDesign(*prob)};
    }));
  }
  std::vector<Level> levels;
  for (auto &j : level_jobs)
  {
    levels.push_back(j.get());
  }
  const Level &fine = levels.back();
  const CoreShell &cs = *fine.cs;
  const PerturbationSeries series = ExpandSeries(cs, fine.lambda0, 4);

  {
    Criterion &c = criterion(1, "disk oracle equivalence");
    std::vector<double> err;
    for (const auto &l : levels)
    {
      err.push_back(Relative(l.lambda0, ref.lambda0));
    }
    c.Require(err[2] <= 5e-3, "lambda0 rel err", err[2]);
    const double order = std::min(std::log2(err[0] / err[1]), std::log2(err[1] / err[2]));
    c.Require(order >= 1.8, "order", order);
    const double l1 = Relative(series.coeffs.lambda[0], ref.lambda1);
    c.Require(l1 <= 1e-2, "lambda1 rel err", l1);
  }

  {
    Criterion &c = criterion(2, "series vs direct remainder");
    const Complex delta = std::polar(1e-2, std::numbers::pi / 4);
    auto half = std::async(std::launch::async, [&] {
      return ResonanceNear(cs, delta / 2.0, fine.lambda0, series.psi_d).lambda;
    });
    const Complex full = ResonanceNear(cs, delta, fine.lambda0, series.psi_d).lambda;
    const Complex halved = half.get();
    for (int N = 1; N <= 2; N++)
    {
      const double r = std::abs(full - EvalLambda(series.coeffs, delta, N)) /
                       std::abs(halved - EvalLambda(series.coeffs, delta / 2.0, N));
      c.Require(r >= std::pow(2.0, N) && r <= std::pow(2.0, N + 2),
                "ratio N=" + std::to_string(N), r);
    }
  }

  {
    Criterion &c = criterion(3, "recursion invariants");
    const SparseMatrix<double> Mc = AssembleMass(*cs.core);
    const RealVector psi_d = series.psi_d;
    const RealVector rest = RealVector::Ones(psi_d.size()) - psi_d;
    double worst = 0.0;
    for (int n = 1; n <= 4; n++)
    {
      const RealVector &pr = series.phi_ring[n - 1], &sr = series.psi_ring[n - 1];
      const RealVector phi = series.Phi(n), psi = series.Psi(n);
      worst = std::max({worst,
                        AbsRatio(cs.shell->Integral(pr), cs.shell->Integral(RealVector(pr.cwiseAbs()))),
                        AbsRatio(cs.core->Integral(sr), cs.core->Integral(RealVector(sr.cwiseAbs()))),
                        AbsRatio(cs.shell->Integral(phi) + psi.dot(Mc * psi_d),
                                 cs.shell->Integral(RealVector(phi.cwiseAbs())) +
                                     psi.cwiseAbs().dot(Mc * psi_d.cwiseAbs())),
                        AbsRatio(psi.dot(Mc * rest), psi.cwiseAbs().dot(Mc * rest.cwiseAbs()))});
    }
    c.Require(worst <= 1e-8, "max relative defect", worst);
  }

  {
    Criterion &c = criterion(4, "dispersion");
    const LorentzParams p{6.7, 0.7, 1.0};
    const CoreDielectric d{1.0};
    const double ws = std::sqrt(0.49 + 1.0);
    const double a1 = 2 * 6.7 * ws / 0.49, a2 = 6.7 * ws / 0.49, a3 = 2 * ws;
    const Sensitivities s = ComputeSensitivities(p, d);
    const double closed = std::max({Relative(s.a1, a1), Relative(s.a2, a2), Relative(s.a3, a3)});
    c.Require(closed <= 1e-12, "closed form vs reference", closed);
    const double fd = std::max({Relative(s.a1_fd, s.a1), Relative(s.a2_fd, s.a2), Relative(s.a3_fd, s.a3)});
    c.Require(fd <= 1e-6, "finite differences", fd);
    c.Require(Relative(s.a2, s.a1 / 2) <= 1e-12, "a2 - a1/2", Relative(s.a2, s.a1 / 2));

    const SeriesCoefficients cal = CalibrateSeries(series.coeffs, ws * ws);
    const ResonanceTrace trace = TraceResonance(cal, p, d, 0.006, 12);
    const Complex w1 = trace.omega_prime0;
    c.Require(std::abs(w1.real()) <= 1e-10 * std::abs(w1.imag()), "|Re w'(0)|", std::abs(w1.real()));
    c.Require(w1.imag() < 0.0, "Im w'(0)", w1.imag());
    double im_max = -HUGE_VAL;
    for (std::size_t i = 1; i < trace.points.size(); i++)
    {
      im_max = std::max(im_max, trace.points[i].omega.imag());
    }
    c.Require(im_max < 0.0, "max Im w on trace", im_max);

    const ResonanceTrace small = TraceResonance(cal, p, d, std::vector<double>{0.0, 1e-4, 2e-4, 4e-4});
    const auto &pts = small.points;
    const double slope = std::abs((pts[1].omega - ws) / pts[1].gamma - w1) / std::abs(w1);
    c.Require(slope <= 1e-2, "slope rel err", slope);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 1; i <= 3; i++)
    {
      const double x = std::log(pts[i].gamma), y = std::log(std::abs(pts[i].omega.real() - ws));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double fit = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    c.Require(std::abs(fit - 2.0) <= 0.2, "log-log slope", fit);
  }

  std::vector<DesignRun> designs;
  for (auto &j : design_jobs)
  {
    designs.push_back(j.get());
  }
  {
    Criterion &c = criterion(5, "optimal design");
    const double r0 = ref.r0;
    auto annulus = [r0](double x, double y) { return std::hypot(x, y) < r0; };
    std::vector<double> sym;
    for (const auto &d : designs)
    {
      sym.push_back(SymmetricDifference(*d.prob, d.state.theta, annulus) / d.prob->A0());
    }
    c.Require(sym[2] <= 0.05, "sym diff / A0", sym[2]);
    c.Require(sym[2] < sym[1] && sym[1] < sym[0], "sym diff at h = 0.04", sym[1]);
    const DesignRun &f = designs.back();
    const double gap = std::abs(f.state.primal - f.state.dual) / std::abs(f.state.dual);
    c.Require(gap <= 1e-6, "gap", gap);
    const double l1 = Lambda1OfDesign(f.state, *f.prob);
    c.Require(Relative(l1, ref.lambda1) <= 2e-2, "lambda1 rel err", Relative(l1, ref.lambda1));
    const std::vector<std::function<double(double, double)>> perturbed = {
      [](double x, double y) { return -std::hypot(x / 1.05, y * 1.05); },
      [](double x, double y) { return -std::hypot(x - 0.05, y); },
      [r0](double x, double y) { return -std::abs(std::hypot(x, y) - (r0 + 0.1)); },
    };
    double margin = HUGE_VAL;
    for (const auto &level : perturbed)
    {
      const double v = PrimalValue(*f.prob, LevelSetDesign(*f.prob, level));
      margin = std::min(margin, std::abs(Lambda1OfValue(*f.prob, v)) - std::abs(l1));
    }
    c.Require(margin > 0.0, "min perturbed |lambda1| margin", margin);
  }

  {
    Criterion &c = criterion(6, "structural properties");
    const Mesh &mesh = *cs.mesh;
    const SparseMatrix<double> K = AssembleStiffness(*cs.omega);
    const RealVector ones = RealVector::Ones(static_cast<Eigen::Index>(cs.omega->Size()));
    c.Require((K * ones).cwiseAbs().maxCoeff() <= 1e-12 * K.coeffs().cwiseAbs().maxCoeff(),
              "|K 1|", (K * ones).cwiseAbs().maxCoeff());
    double area = 0.0;
    for (std::size_t t = 0; t < mesh.NumTriangles(); t++)
    {
      area += mesh.TriangleArea(t);
    }
    const double mass = ones.dot(AssembleMass(*cs.omega) * ones);
    c.Require(Relative(mass, area) <= 1e-13, "mass total", Relative(mass, area));

    const RealVector &psi = series.psi_d;
    const BoundaryFunctional flux =
        WeakNormalFlux(*cs.core, psi, fine.lambda0, RealVector::Zero(psi.size()));
    const double lhs = flux.Total(), rhs = -fine.lambda0 * cs.core->Integral(psi);
    c.Require(Relative(lhs, rhs) <= 1e-10, "flux identity", Relative(lhs, rhs));

    double bathtub = 0.0;
    bool weak = true;
    for (const auto &d : designs)
    {
      const RealVector dens = EnergyDensity(*d.prob, d.state.w);
      const Bathtub b = BathtubProjection(dens, d.prob->ElementAreas(), d.prob->A0());
      double sum = 0.0;
      for (std::size_t e = 0; e < d.prob->NumElements(); e++)
      {
        sum += b.theta[static_cast<Eigen::Index>(e)] * d.prob->ElementAreas()[e];
      }
      bathtub = std::max(bathtub, Relative(d.prob->Lambda0() * sum, d.prob->FTotal()));
      for (const auto &rec : d.state.history)
      {
        weak = weak && rec.primal <= rec.dual + 1e-13 * std::abs(rec.dual);
      }
    }
    SaddleOptions so;
    so.iterations = 20;
    const DesignState saddle = SaddleSolve(*designs.front().prob, so);
    for (const auto &rec : saddle.history)
    {
      weak = weak && rec.primal <= rec.dual + 1e-13 * std::abs(rec.dual);
    }
    c.Require(bathtub <= 1e-12, "bathtub area", bathtub);
    c.Require(weak, "weak duality on every record", weak);

    std::stringstream first, second;
    SaveMesh(mesh, first);
    const Mesh back = LoadMesh(first);
    SaveMesh(back, second);
    const bool same = back == mesh && first.str() == second.str();
    c.Require(same, "mesh round trip", same);
  }

  bool all = true;
  for (const auto &c : out)
  {
    std::printf("criterion %d %-28s %s  %s\n", c.id, c.name.c_str(), c.pass ? "PASS" : "FAIL",
                c.detail.str().c_str());
    all = all && c.pass;
  }
  return all ? 0 : 1;
}
