// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ENZRES_DISPERSION_HPP
#define ENZRES_DISPERSION_HPP

#include <functional>
#include <ostream>
#include <vector>

#include "enzres/fem.hpp"
#include "enzres/perturbation.hpp"

namespace enzres
{

// Lorentz permittivity ε∞(1 + ωp²/(ω0² − ω² − iωγ)), nondimensional
// frequencies, time dependence e^{−iωt}.
struct LorentzParams
{
  double eps_inf = 6.7;
  double omega_p = 0.7;
  double omega_0 = 1.0;
};

// Core permittivity, constant in frequency.
struct CoreDielectric
{
  double eps_d = 1.0;
};

void Validate(const LorentzParams &p);
void Validate(const CoreDielectric &d);

Complex EpsEnz(const LorentzParams &p, Complex omega, double gamma);
// ∂ε/∂ω at fixed γ.
Complex EpsEnzDerivative(const LorentzParams &p, Complex omega, double gamma);

double EnzFrequency(const LorentzParams &p);
double LambdaStar(const LorentzParams &p, const CoreDielectric &d);

// Scale factor t such that the mesh scaled by t has λ0 = λ*.
double CalibrateScale(double lambda0_geom, double lambda_star);

// Coefficients of the series on the geometry scaled to λ0 = λ* (λ_n·λ*/λ0).
SeriesCoefficients CalibrateSeries(const SeriesCoefficients &s, double lambda_star);

struct Sensitivities
{
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;           // closed form
  double a1_fd = 0.0, a2_fd = 0.0, a3_fd = 0.0;  // central differences
};

Sensitivities ComputeSensitivities(const LorentzParams &p, const CoreDielectric &d,
                                   double step = 1e-6);

Complex OmegaPrime0(double a1, double a2, double a3, double eps_d, double lambda1);

struct TracePoint
{
  double gamma = 0.0;
  Complex omega;
  Complex delta;
  Complex lambda;
  int newton_iters = 0;
};

struct ResonanceTrace
{
  std::vector<TracePoint> points;
  Complex omega_prime0;
};

// Solves Λ(ε(ω, γ)/ε_D) = ω² ε_D along γ = 0, γ_max/steps, ..., γ_max.
// The series must already be calibrated (λ0 = λ*).
ResonanceTrace TraceResonance(const SeriesCoefficients &s, const LorentzParams &p,
                              const CoreDielectric &d, double gamma_max, int steps);

// Same equation on an explicit γ list (warm-started in the given order).
ResonanceTrace TraceResonance(const SeriesCoefficients &s, const LorentzParams &p,
                              const CoreDielectric &d, const std::vector<double> &gammas);

// Solves Λ(δ(ω, γ)) = ω² ε_D for one γ by secant iteration with an arbitrary
// eigenvalue map Λ (e.g. a direct eigensolve), starting from omega_start.
Complex SolveFrequency(const std::function<Complex(Complex)> &lambda_of_delta,
                       const LorentzParams &p, const CoreDielectric &d, double gamma,
                       Complex omega_start, double tol = 1e-10, int max_iters = 50);

void WriteTraceCsv(const ResonanceTrace &trace, std::ostream &out);

}  // namespace enzres

#endif  // ENZRES_DISPERSION_HPP
