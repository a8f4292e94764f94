// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ENZRES_BESSEL_HPP
#define ENZRES_BESSEL_HPP

namespace enzres
{

// J0 or J1 for real x (negative x via parity). Absolute error below 1e-12
// for |x| ≤ 50.
double BesselJ(int order, double x);

//
// Closed-form radially symmetric configuration: unit-disk core, annular
// shell (1, r0) whose area A0 satisfies the consistency condition at λ0.
// Wavenumber convention k = √λ0.
//
struct DiskCase
{
  double lambda0 = 0.0;
  double k = 0.0;
  double A0 = 0.0;
  double r0 = 0.0;
};

DiskCase MakeDiskCase(double lambda0);

// ψ_d(r) = J0(k r)/J0(k) on [0, 1].
double DiskPsiD(const DiskCase &dc, double r);

// φ1(r) = b + c ln r − λ0 r²/4 on [1, r0], with φ1'(r0) = 0 and φ1(r0) = 0.
double AnnulusPhi1(const DiskCase &dc, double r);
double AnnulusPhi1Prime(const DiskCase &dc, double r);

// ∫ |∇φ1|² over the annulus.
double AnnulusGradEnergy(const DiskCase &dc);
// ∫ ψ_d² over the unit disk.
double DiskPsiSquared(const DiskCase &dc);
// λ1 = −∫|∇φ1|² / (A0 + ∫ψ_d²).
double AnnulusLambda1(const DiskCase &dc);

}  // namespace enzres

#endif  // ENZRES_BESSEL_HPP
