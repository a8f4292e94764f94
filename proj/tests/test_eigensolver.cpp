// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "enzres/eigensolver.hpp"
#include "enzres/error.hpp"
#include "oracles.hpp"

using namespace enzres;

namespace
{

struct Setup
{
  CoreShell cs;
  double lambda0;
  PerturbationSeries series;
};

const Setup &Oracle()
{
  static const Setup s = [] {
    const oracle::Disk ref(9.0);
    CoreShell cs(std::make_shared<const Mesh>(BuildConcentricMesh({1.0, ref.r0, std::nullopt, 0.04})));
    const double l0 = FindLambda0(cs, 6.0, 14.0);
    return Setup{cs, l0, ExpandSeries(cs, l0, 4)};
  }();
  return s;
}

}  // namespace

TEST_CASE("operator assembly")
{
  const auto &s = Oracle();
  const OperatorPair one = AssembleOperator(s.cs, 1.0);
  const SparseMatrix<double> K = AssembleStiffness(*s.cs.omega);
  CHECK((one.K - K.cast<Complex>()).norm() <= 1e-14 * K.norm());
  CHECK((one.M - AssembleMass(*s.cs.omega)).norm() == 0.0);

  const OperatorPair ii = AssembleOperator(s.cs, Complex(0, 1));
  const SparseMatrix<double> Kd =
      AssembleStiffness(*s.cs.omega, std::map<int, double>{{0, 1.0}, {1, 0.0}});
  const SparseMatrix<double> Ks =
      AssembleStiffness(*s.cs.omega, std::map<int, double>{{0, 0.0}, {1, 1.0}});
  const SparseMatrix<Complex> expected = Kd.cast<Complex>() + Complex(0, -1) * Ks.cast<Complex>();
  CHECK((ii.K - expected).norm() <= 1e-14 * expected.norm());
  CHECK((SparseMatrix<Complex>(ii.K.transpose()) - ii.K).norm() == 0.0);
  CHECK_THROWS_AS(AssembleOperator(s.cs, 0.0), ValidationError);
}

TEST_CASE("real delta gives a real eigenvalue near the series")
{
  const auto &s = Oracle();
  const double delta = 1e-2;
  const ResonancePair p = ResonanceNear(s.cs, delta, s.lambda0, s.series.psi_d);
  CHECK(std::abs(p.lambda.imag()) <= 1e-9 * std::abs(p.lambda));
  const auto &c = s.series.coeffs;
  CHECK(std::abs(p.lambda - (c.lambda0 + delta * c.lambda[0])) <=
        3.0 * delta * delta * std::abs(c.lambda[1]));
  CHECK(p.residual <= 1e-9);
  CHECK(p.separation >= 1e3 * 1e-9);

  // ∫u_δ u0 = |Ω∖D̄| + ∫ψ_d², unconjugated.
  const RealVector u0 = BaseField(s.cs, s.series.psi_d);
  const Complex norm = p.u.values.transpose() * (AssembleMass(*s.cs.omega) * u0).cast<Complex>();
  CHECK(std::abs(norm - c.normalization) <= 1e-9 * c.normalization);
}

TEST_CASE("complex delta: third-order remainder")
{
  const auto &s = Oracle();
  const Complex delta = std::polar(1e-2, std::numbers::pi / 4);
  const ResonancePair a = ResonanceNear(s.cs, delta, s.lambda0, s.series.psi_d);
  const ResonancePair b = ResonanceNear(s.cs, delta / 2.0, s.lambda0, s.series.psi_d);
  CHECK(std::abs(a.lambda.imag()) > 0.0);
  for (int N : {1, 2})
  {
    CAPTURE(N);
    const double ratio = std::abs(a.lambda - EvalLambda(s.series.coeffs, delta, N)) /
                         std::abs(b.lambda - EvalLambda(s.series.coeffs, delta / 2.0, N));
    CHECK(ratio >= std::pow(2.0, N));
    CHECK(ratio <= std::pow(2.0, N + 2));
  }
}

TEST_CASE("eigenvector tends to u0")
{
  const auto &s = Oracle();
  const RealVector u0 = BaseField(s.cs, s.series.psi_d);
  const SparseMatrix<double> M = AssembleMass(*s.cs.omega);
  std::vector<double> dist;
  for (double delta : {1e-2, 1e-3})
  {
    const ComplexVector diff =
        ResonanceNear(s.cs, delta, s.lambda0, s.series.psi_d).u.values - u0.cast<Complex>();
    dist.push_back(std::sqrt(std::abs(Complex(diff.adjoint() * (M.cast<Complex>() * diff)))));
  }
  CHECK(dist[1] < 0.2 * dist[0]);
}
