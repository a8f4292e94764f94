// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include "enzres/dispersion.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "enzres/error.hpp"

namespace enzres
{

namespace
{

constexpr Complex kI(0.0, 1.0);

Complex Denominator(const LorentzParams &p, Complex omega, double gamma)
{
  return p.omega_0 * p.omega_0 - omega * omega - kI * omega * gamma;
}

}  // namespace

void Validate(const LorentzParams &p)
{
  if (!(p.eps_inf > 0.0) || !(p.omega_p > 0.0) || !(p.omega_0 >= 0.0))
  {
    throw ValidationError("Lorentz parameters need eps_inf > 0, omega_p > 0, omega_0 >= 0");
  }
}

void Validate(const CoreDielectric &d)
{
  if (!(d.eps_d > 0.0))
  {
    throw ValidationError("core permittivity eps_D must be positive");
  }
}

Complex EpsEnz(const LorentzParams &p, Complex omega, double gamma)
{
  const Complex den = Denominator(p, omega, gamma);
  if (den == Complex(0.0))
  {
    throw ValidationError("eps_enz: frequency sits on the Lorentz pole");
  }
  return p.eps_inf * (1.0 + p.omega_p * p.omega_p / den);
}

Complex EpsEnzDerivative(const LorentzParams &p, Complex omega, double gamma)
{
  const Complex den = Denominator(p, omega, gamma);
  if (den == Complex(0.0))
  {
    throw ValidationError("eps_enz: frequency sits on the Lorentz pole");
  }
  return p.eps_inf * p.omega_p * p.omega_p * (2.0 * omega + kI * gamma) / (den * den);
}

double EnzFrequency(const LorentzParams &p)
{
  return std::sqrt(p.omega_p * p.omega_p + p.omega_0 * p.omega_0);
}

double LambdaStar(const LorentzParams &p, const CoreDielectric &d)
{
  const double w = EnzFrequency(p);
  return w * w * d.eps_d;
}

double CalibrateScale(double lambda0_geom, double lambda_star)
{
  if (!(lambda0_geom > 0.0) || !(lambda_star > 0.0))
  {
    throw ValidationError("calibrate_scale: both eigenvalues must be positive");
  }
  return std::sqrt(lambda0_geom / lambda_star);
}

SeriesCoefficients CalibrateSeries(const SeriesCoefficients &s, double lambda_star)
{
  const double ratio = lambda_star / s.lambda0;
  const double t = CalibrateScale(s.lambda0, lambda_star);
  SeriesCoefficients out = s;
  out.lambda0 = lambda_star;
  for (double &l : out.lambda)
  {
    l *= ratio;
  }
  // Areas scale with t²; the constants e_n are scale invariant.
  out.normalization *= t * t;
  return out;
}

Sensitivities ComputeSensitivities(const LorentzParams &p, const CoreDielectric &d, double step)
{
  Validate(p);
  Validate(d);
  const double w = EnzFrequency(p);
  const double wp2 = p.omega_p * p.omega_p;
  Sensitivities s;
  s.a1 = 2.0 * p.eps_inf * w / wp2;
  s.a2 = p.eps_inf * w / wp2;
  s.a3 = 2.0 * w * d.eps_d;

  const double hw = step * w;
  s.a1_fd = ((EpsEnz(p, w + hw, 0.0) - EpsEnz(p, w - hw, 0.0)) / (2.0 * hw)).real();
  s.a2_fd = ((EpsEnz(p, w, step) - EpsEnz(p, w, -step)) / (2.0 * step) / kI).real();
  s.a3_fd = ((w + hw) * (w + hw) * d.eps_d - (w - hw) * (w - hw) * d.eps_d) / (2.0 * hw);
  return s;
}

Complex OmegaPrime0(double a1, double a2, double a3, double eps_d, double lambda1)
{
  if (!(lambda1 < 0.0))
  {
    throw ValidationError("omega_prime0: lambda1 must be negative");
  }
  return -kI * a2 / (a1 + a3 * eps_d / std::abs(lambda1));
}

ResonanceTrace TraceResonance(const SeriesCoefficients &s, const LorentzParams &p,
                              const CoreDielectric &d, double gamma_max, int steps)
{
  if (steps < 1 || !(gamma_max >= 0.0))
  {
    throw ValidationError("trace_resonance: need steps >= 1 and gamma_max >= 0");
  }
  std::vector<double> gammas;
  for (int i = 0; i <= steps; i++)
  {
    gammas.push_back(gamma_max * i / steps);
  }
  return TraceResonance(s, p, d, gammas);
}

ResonanceTrace TraceResonance(const SeriesCoefficients &s, const LorentzParams &p,
                              const CoreDielectric &d, const std::vector<double> &gammas)
{
  Validate(p);
  Validate(d);
  const double lstar = LambdaStar(p, d);
  if (std::abs(s.lambda0 - lstar) > 1e-9 * lstar)
  {
    throw ValidationError("trace_resonance: series is not calibrated (lambda0 != lambda*); "
                          "rescale the geometry first");
  }
  if (s.Order() < 2)
  {
    throw ValidationError("trace_resonance: series order must be at least 2");
  }

  const Sensitivities sens = ComputeSensitivities(p, d);
  ResonanceTrace trace;
  trace.omega_prime0 = OmegaPrime0(sens.a1, sens.a2, sens.a3, d.eps_d, s.lambda[0]);

  Complex omega = EnzFrequency(p);
  for (double gamma : gammas)
  {
    if (gamma < 0.0)
    {
      throw ValidationError("trace_resonance: gamma must be nonnegative");
    }
    auto G = [&](Complex w) {
      return EvalLambda(s, EpsEnz(p, w, gamma) / d.eps_d) - w * w * d.eps_d;
    };
    int iters = 0;
    Complex g = G(omega);
    // Newton until |G| ≤ 1e-10, then polish until the step stalls.
    double last_step = std::numeric_limits<double>::infinity();
    int polish = 0;
    auto done = [&] {
      if (!(std::abs(g) <= 1e-10))
      {
        return false;
      }
      if (iters == 0)
      {
        return gamma == 0.0;
      }
      return last_step <= 1e-15 * std::abs(omega) || polish >= 3;
    };
    while (!done())
    {
      if (iters >= 50 || !std::isfinite(std::abs(g)))
      {
        std::ostringstream msg;
        msg << "trace_resonance: Newton diverged at gamma = " << gamma << " (omega = "
            << omega.real() << (omega.imag() < 0 ? "" : "+") << omega.imag() << "i, |G| = "
            << std::abs(g) << ")";
        throw SolverError(msg.str());
      }
      const Complex delta = EpsEnz(p, omega, gamma) / d.eps_d;
      const Complex dG = EvalLambdaDerivative(s, delta) * EpsEnzDerivative(p, omega, gamma) /
                           d.eps_d -
                         2.0 * omega * d.eps_d;
      const Complex step = g / dG;
      omega -= step;
      last_step = std::abs(step);
      iters++;
      g = G(omega);
      polish += std::abs(g) <= 1e-10;
    }
    TracePoint pt;
    pt.gamma = gamma;
    pt.omega = omega;
    pt.delta = EpsEnz(p, omega, gamma) / d.eps_d;
    pt.lambda = EvalLambda(s, pt.delta);
    pt.newton_iters = iters;
    trace.points.push_back(pt);
  }
  return trace;
}

Complex SolveFrequency(const std::function<Complex(Complex)> &lambda_of_delta,
                       const LorentzParams &p, const CoreDielectric &d, double gamma,
                       Complex omega_start, double tol, int max_iters)
{
  auto G = [&](Complex w) {
    return lambda_of_delta(EpsEnz(p, w, gamma) / d.eps_d) - w * w * d.eps_d;
  };
  Complex w0 = omega_start, w1 = omega_start * (1.0 + 1e-6);
  Complex g0 = G(w0), g1 = G(w1);
  for (int it = 0; it < max_iters; it++)
  {
    if (std::abs(g1) <= tol)
    {
      return w1;
    }
    if (g1 == g0)
    {
      break;
    }
    const Complex w2 = w1 - g1 * (w1 - w0) / (g1 - g0);
    w0 = w1;
    g0 = g1;
    w1 = w2;
    g1 = G(w1);
  }
  if (std::abs(g1) <= tol)
  {
    return w1;
  }
  std::ostringstream msg;
  msg << "solve_frequency: secant iteration did not converge at gamma = " << gamma;
  throw SolverError(msg.str());
}

void WriteTraceCsv(const ResonanceTrace &trace, std::ostream &out)
{
  auto num = [&out](double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
  };
  out << "gamma,re_omega,im_omega,re_delta,im_delta,newton_iters\n";
  for (const auto &pt : trace.points)
  {
    num(pt.gamma);
    out << ',';
    num(pt.omega.real());
    out << ',';
    num(pt.omega.imag());
    out << ',';
    num(pt.delta.real());
    out << ',';
    num(pt.delta.imag());
    out << ',' << pt.newton_iters << '\n';
  }
}

}  // namespace enzres
