// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include "enzres/bessel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "enzres/error.hpp"

namespace enzres
{

namespace
{

double Series(int n, double x)
{
  const double q = -0.25 * x * x;
  double term = n == 0 ? 1.0 : 0.5 * x;
  double sum = term;
  for (int k = 1; k < 200; k++)
  {
    term *= q / (k * static_cast<double>(k + n));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum))
    {
      break;
    }
  }
  return sum;
}

// Backward recurrence normalized with J0 + 2 Σ J_2k = 1.
double Miller(int n, double x)
{
  const int start = 2 * (static_cast<int>(x + 20.0 + 2.0 * std::sqrt(x)) / 2 + 1);
  double jp = 0.0, j = 1e-30, norm = 0.0, j0 = 0.0, j1 = 0.0;
  for (int k = start; k > 0; k--)
  {
    const double jm = 2.0 * k / x * j - jp;
    jp = j;
    j = jm;
    if (k - 1 == 1)
    {
      j1 = j;
    }
    if ((k - 1) % 2 == 0 && k - 1 > 0)
    {
      norm += 2.0 * j;
    }
    if (std::abs(j) > 1e250)
    {
      jp *= 1e-250;
      j *= 1e-250;
      j1 *= 1e-250;
      norm *= 1e-250;
    }
  }
  j0 = j;
  norm += j0;
  return (n == 0 ? j0 : j1) / norm;
}

double Asymptotic(int n, double x)
{
  const double mu = 4.0 * n * n;
  double p = 1.0, q = 0.0, term = 1.0, last = 1.0;
  for (int k = 1; k < 60; k++)
  {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(term) > last)
    {
      break;
    }
    last = std::abs(term);
    // Terms alternate between Q (odd k) and P (even k), each with sign (−1)^⌊k/2⌋.
    const double signed_term = (k / 2) % 2 == 0 ? term : -term;
    (k % 2 == 1 ? q : p) += signed_term;
    if (last < 1e-17)
    {
      break;
    }
  }
  const double chi = x - (0.5 * n + 0.25) * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double BesselJ(int order, double x)
{
  if (order != 0 && order != 1)
  {
    throw ValidationError("bessel_j: only orders 0 and 1 are supported");
  }
  if (!std::isfinite(x))
  {
    throw ValidationError("bessel_j: argument must be finite");
  }
  if (x < 0.0)
  {
    return order == 0 ? BesselJ(0, -x) : -BesselJ(1, -x);
  }
  if (x <= 8.0)
  {
    return Series(order, x);
  }
  if (x <= 25.0)
  {
    return Miller(order, x);
  }
  return Asymptotic(order, x);
}

DiskCase MakeDiskCase(double lambda0)
{
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0))
  {
    throw ValidationError("disk_case: lambda0 must be positive");
  }
  DiskCase dc;
  dc.lambda0 = lambda0;
  dc.k = std::sqrt(lambda0);
  const double j0 = BesselJ(0, dc.k), j1 = BesselJ(1, dc.k);
  if (std::abs(j0) < 1e-12)
  {
    throw ValidationError("disk_case: J0(sqrt(lambda0)) vanishes, lambda0 is a Dirichlet "
                          "eigenvalue of the disk");
  }
  dc.A0 = -2.0 * std::numbers::pi * j1 / (dc.k * j0);
  if (!(dc.A0 > 0.0))
  {
    throw ValidationError("disk_case: lambda0 not permissible for positive shell area");
  }
  dc.r0 = std::sqrt(1.0 + dc.A0 / std::numbers::pi);
  return dc;
}

double DiskPsiD(const DiskCase &dc, double r)
{
  if (r < 0.0 || r > 1.0)
  {
    throw ValidationError("disk_psi_d: r outside [0, 1]");
  }
  return BesselJ(0, dc.k * r) / BesselJ(0, dc.k);
}

namespace
{

void CheckAnnulus(const DiskCase &dc, double r)
{
  if (r < 1.0 || r > dc.r0)
  {
    throw ValidationError("annulus_phi1: r outside [1, r0]");
  }
}

}  // namespace

double AnnulusPhi1(const DiskCase &dc, double r)
{
  CheckAnnulus(dc, r);
  const double l = dc.lambda0, r02 = dc.r0 * dc.r0;
  const double c = 0.5 * l * r02;
  const double b = 0.25 * l * r02 - c * std::log(dc.r0);
  return b + c * std::log(r) - 0.25 * l * r * r;
}

double AnnulusPhi1Prime(const DiskCase &dc, double r)
{
  CheckAnnulus(dc, r);
  const double c = 0.5 * dc.lambda0 * dc.r0 * dc.r0;
  return c / r - 0.5 * dc.lambda0 * r;
}

double AnnulusGradEnergy(const DiskCase &dc)
{
  const double l = dc.lambda0, r02 = dc.r0 * dc.r0;
  const double c = 0.5 * l * r02;
  return 2.0 * std::numbers::pi *
         (c * c * std::log(dc.r0) - 0.5 * c * l * (r02 - 1.0) + l * l * (r02 * r02 - 1.0) / 16.0);
}

double DiskPsiSquared(const DiskCase &dc)
{
  const double j0 = BesselJ(0, dc.k), j1 = BesselJ(1, dc.k);
  return std::numbers::pi * (j0 * j0 + j1 * j1) / (j0 * j0);
}

double AnnulusLambda1(const DiskCase &dc)
{
  return -AnnulusGradEnergy(dc) / (dc.A0 + DiskPsiSquared(dc));
}

}  // namespace enzres
