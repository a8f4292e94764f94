// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "enzres/error.hpp"
#include "enzres/perturbation.hpp"
#include "oracles.hpp"

using namespace enzres;

namespace
{

const oracle::Disk &Ref()
{
  static const oracle::Disk ref(9.0);
  return ref;
}

CoreShell Geometry(double r0, double h)
{
  return CoreShell(std::make_shared<const Mesh>(BuildConcentricMesh({1.0, r0, std::nullopt, h})));
}

struct Expanded
{
  CoreShell cs;
  double lambda0;
  PerturbationSeries series;
};

const Expanded &Oracle()
{
  static const Expanded e = [] {
    CoreShell cs = Geometry(Ref().r0, 0.04);
    const double l0 = FindLambda0(cs, 6.0, 14.0);
    return Expanded{cs, l0, ExpandSeries(cs, l0, 4)};
  }();
  return e;
}

}  // namespace

TEST_CASE("psi_d limits")
{
  const CoreShell cs = Geometry(2.0, 0.05);
  const RealField psi = ComputePsiD(cs, 1e-8);
  CHECK((psi.values.array() - 1.0).abs().maxCoeff() <= 1e-6);
  CHECK_THROWS_AS(ComputePsiD(cs, 5.7832), NearEigenvalueError);
}

TEST_CASE("consistency residual")
{
  const CoreShell big = Geometry(2.0, 0.05);
  CHECK(ConsistencyResidual(big, 9.0) ==
        doctest::Approx(3 * std::numbers::pi - Ref().A0).epsilon(2e-3));
  CHECK(ConsistencyResidual(big, 1e-8) ==
        doctest::Approx(big.core_area + big.shell_area).epsilon(1e-7));

  std::vector<double> res;
  for (double h : {0.08, 0.04, 0.02})
  {
    res.push_back(std::abs(ConsistencyResidual(Geometry(Ref().r0, h), 9.0)));
  }
  CHECK(std::log2(res[0] / res[1]) >= 1.8);
  CHECK(std::log2(res[1] / res[2]) >= 1.8);
}

TEST_CASE("find_lambda0")
{
  const auto &e = Oracle();
  const double omega_area = e.cs.core_area + e.cs.shell_area;
  CHECK(std::abs(ConsistencyResidual(e.cs, e.lambda0)) <= 1e-10 * omega_area);
  CHECK(std::abs(e.lambda0 - 9.0) <= 2e-2);
  CHECK_THROWS_WITH_AS(FindLambda0(e.cs, 0.1, 1.0), doctest::Contains("no permissible"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(FindLambda0(e.cs, 5.0, 7.0), doctest::Contains("straddles"),
                       ValidationError);
  CHECK_THROWS_AS(FindLambda0(e.cs, 3.0, 2.0), ValidationError);
}

TEST_CASE("series invariants")
{
  const auto &e = Oracle();
  const auto &s = e.series;
  const auto &cs = e.cs;
  REQUIRE(s.coeffs.Order() == 4);
  CHECK(s.coeffs.lambda[0] < 0.0);
  CHECK(s.lambda1_energy == doctest::Approx(s.coeffs.lambda[0]).epsilon(1e-8));
  CHECK(s.coeffs.lambda[0] == doctest::Approx(Ref().lambda1).epsilon(1e-2));

  const SparseMatrix<double> Mc = AssembleMass(*cs.core);
  for (int n = 1; n <= 4; n++)
  {
    CAPTURE(n);
    const RealVector &pr = s.phi_ring[n - 1], &qr = s.psi_ring[n - 1];
    CHECK(std::abs(cs.shell->Integral(pr)) <= 1e-10 * cs.shell->Integral(RealVector(pr.cwiseAbs())));
    CHECK(std::abs(cs.core->Integral(qr)) <= 1e-10 * cs.core->Integral(RealVector(qr.cwiseAbs())));
    const RealVector phi = s.Phi(n), psi = s.Psi(n);
    const double normalization = cs.shell->Integral(phi) + psi.dot(Mc * s.psi_d);
    CHECK(std::abs(normalization) <= 1e-9 * (cs.shell->Integral(RealVector(phi.cwiseAbs())) +
                                             psi.cwiseAbs().dot(Mc * s.psi_d.cwiseAbs())));
    const RealVector q = RealVector::Ones(s.psi_d.size()) - s.psi_d;
    CHECK(std::abs(psi.dot(Mc * q)) <= 1e-9 * psi.cwiseAbs().dot(Mc * q.cwiseAbs()));
    CHECK(std::abs(s.defects[n - 1]) <= 1e-8 * (cs.core_area + cs.shell_area) * 9.0);
  }
}

TEST_CASE("lambda0 and lambda1 converge to the oracle")
{
  std::vector<double> e0, e1;
  for (double h : {0.08, 0.04, 0.02})
  {
    const CoreShell cs = Geometry(Ref().r0, h);
    const double l0 = FindLambda0(cs, 6.0, 14.0);
    e0.push_back(std::abs(l0 - 9.0));
    e1.push_back(std::abs(ExpandSeries(cs, l0, 1).coeffs.lambda[0] - Ref().lambda1));
  }
  CHECK(e0[2] <= 5e-3 * 9.0);
  CHECK(std::log2(e0[0] / e0[1]) >= 1.8);
  CHECK(std::log2(e0[1] / e0[2]) >= 1.8);
  CHECK(e1[2] <= 1e-2 * std::abs(Ref().lambda1));
  CHECK(e1[2] < e1[1]);
}

TEST_CASE("series evaluation")
{
  const auto &e = Oracle();
  const auto &s = e.series;
  CHECK(EvalLambda(s.coeffs, 0.0) == Complex(e.lambda0, 0.0));
  const ComplexField u0 = EvalField(s, 0.0);
  const RealVector base = BaseField(e.cs, s.psi_d);
  CHECK((u0.values - base.cast<Complex>()).cwiseAbs().maxCoeff() == 0.0);

  CHECK(EvalLambda(s.coeffs, 0.05).imag() == 0.0);
  const Complex d3 = EvalLambda(s.coeffs, 1e-3, 3) - EvalLambda(s.coeffs, 1e-3, 2);
  CHECK(std::abs(d3 - s.coeffs.lambda[2] * 1e-9) <= 1e-14);

  // Derivative by central differences of the polynomial.
  const Complex z(0.03, 0.02), h = 1e-6;
  const Complex fd = (EvalLambda(s.coeffs, z + h) - EvalLambda(s.coeffs, z - h)) / (2.0 * h);
  CHECK(std::abs(EvalLambdaDerivative(s.coeffs, z) - fd) <= 1e-8);

  // ∫u_δ u0 = |Ω∖D̄| + ∫ψ_d² up to the truncation order.
  const SparseMatrix<double> M = AssembleMass(*e.cs.omega);
  for (double delta : {1e-2, 5e-3})
  {
    const ComplexVector u = EvalField(s, delta).values;
    const Complex norm = u.transpose() * (M * base).cast<Complex>();
    CHECK(std::abs(norm - s.coeffs.normalization) <= 1e-12 * s.coeffs.normalization);
  }
}

TEST_CASE("expand_series entry checks")
{
  const auto &e = Oracle();
  CHECK_THROWS_AS(ExpandSeries(e.cs, e.lambda0 + 0.1, 2), ValidationError);
  CHECK_THROWS_AS(ExpandSeries(e.cs, e.lambda0, 0), ValidationError);
}
