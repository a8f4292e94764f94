// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include "enzres/validation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "enzres/bessel.hpp"
#include "enzres/design.hpp"
#include "enzres/dispersion.hpp"
#include "enzres/eigensolver.hpp"
#include "enzres/error.hpp"
#include "enzres/perturbation.hpp"

namespace enzres
{

namespace
{

constexpr double kLambda0 = 9.0;

void RunParallel(std::vector<std::function<void()>> tasks, int threads)
{
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++)
    {
      try
      {
        tasks[i]();
      }
      catch (...)
      {
        std::lock_guard lock(error_mutex);
        if (!error)
        {
          error = std::current_exception();
        }
      }
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), tasks.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n; i++)
  {
    pool.emplace_back(worker);
  }
  worker();
  for (auto &t : pool)
  {
    t.join();
  }
  if (error)
  {
    std::rethrow_exception(error);
  }
}

std::string Format(const char *op, double bound)
{
  std::ostringstream out;
  out << op << ' ' << bound;
  return out.str();
}

Check AtMost(std::string name, double value, double bound)
{
  return {std::move(name), value, Format("<=", bound), value <= bound};
}

Check AtLeast(std::string name, double value, double bound)
{
  return {std::move(name), value, Format(">=", bound), value >= bound};
}

Check Within(std::string name, double value, double lo, double hi)
{
  std::ostringstream bound;
  bound << "in [" << lo << ", " << hi << "]";
  return {std::move(name), value, bound.str(), value >= lo && value <= hi};
}

double Ratio(double num, double den)
{
  return den == 0.0 ? (num == 0.0 ? 0.0 : HUGE_VAL) : num / den;
}

struct Level
{
  double h = 0.0;
  std::shared_ptr<const CoreShell> cs;
  double lambda0 = 0.0;
};

struct DesignLevel
{
  double sym_diff = 0.0;
  double A0 = 0.0;
  double gap = 0.0;
  double lambda1 = 0.0;
  double perturbed_margin = 0.0;
};

DesignLevel RunDesign(double h, const DiskCase &dc)
{
  const DesignProblem prob = MakeDiskDesignProblem(h, 2.0, kLambda0);
  const DesignState state = OptimizeDesign(prob);
  DesignLevel out;
  out.A0 = prob.A0();
  const double r0 = dc.r0;
  out.sym_diff = SymmetricDifference(prob, state.theta, [r0](double x, double y) {
    return std::hypot(x, y) < r0;
  });
  out.gap = std::abs(state.dual - state.primal) / std::abs(state.dual);
  out.lambda1 = Lambda1OfDesign(state, prob);

  const std::vector<std::function<double(double, double)>> perturbed = {
    [](double x, double y) { return -std::hypot(x / 1.05, y * 1.05); },
    [](double x, double y) { return -std::hypot(x - 0.05, y); },
    // Annulus of area A0 detached from the core.
    [r0](double x, double y) { return -std::abs(std::hypot(x, y) - (r0 + 0.1)); },
  };
  out.perturbed_margin = HUGE_VAL;
  for (const auto &level : perturbed)
  {
    const double l1 = Lambda1OfValue(prob, PrimalValue(prob, LevelSetDesign(prob, level)));
    out.perturbed_margin = std::min(out.perturbed_margin, std::abs(l1) - std::abs(out.lambda1));
  }
  return out;
}

}  // namespace

bool DiskReport::Passed() const
{
  return std::all_of(checks.begin(), checks.end(), [](const Check &c) { return c.pass; });
}

int ThreadsFromEnv()
{
  const char *env = std::getenv("ENZRES_THREADS");
  if (!env || !*env)
  {
    return 1;
  }
  int value = 0;
  const char *end = env + std::char_traits<char>::length(env);
  auto [ptr, ec] = std::from_chars(env, end, value);
  if (ec != std::errc() || ptr != end || value < 1)
  {
    throw ValidationError(std::string("ENZRES_THREADS must be a positive integer, got '") + env +
                          "'");
  }
  return value;
}

DiskReport ValidateDisk(const DiskOptions &opts)
{
  if (!(opts.h > 0.0) || opts.threads < 1)
  {
    throw ValidationError("validate-disk: need h > 0 and threads >= 1");
  }
  const DiskCase dc = MakeDiskCase(kLambda0);
  DiskReport report;
  report.h = opts.h;

  // Mesh levels h, 2h, 4h and, independently, the design problems.
  std::vector<Level> levels(3);
  std::vector<DesignLevel> designs(opts.design ? 3 : 0);
  std::vector<std::function<void()>> tasks;
  for (int i = 0; i < 3; i++)
  {
    levels[i].h = opts.h * (1 << i);
    tasks.emplace_back([&, i] {
      auto mesh = std::make_shared<const Mesh>(
          BuildConcentricMesh({1.0, dc.r0, std::nullopt, levels[i].h}));
      levels[i].cs = std::make_shared<const CoreShell>(mesh);
      levels[i].lambda0 = FindLambda0(*levels[i].cs, 6.0, 14.0);
    });
    if (opts.design)
    {
      tasks.emplace_back([&, i] { designs[i] = RunDesign(levels[i].h, dc); });
    }
  }
  RunParallel(std::move(tasks), opts.threads);

  const Level &fine = levels[0];
  std::vector<double> err(3);
  for (int i = 0; i < 3; i++)
  {
    err[i] = std::abs(levels[i].lambda0 - kLambda0) / kLambda0;
  }
  report.checks.push_back(AtMost("lambda0 relative error", err[0], 5e-3));
  report.checks.push_back(AtLeast("lambda0 observed order",
                                  std::min(std::log2(err[1] / err[0]), std::log2(err[2] / err[1])),
                                  1.8));

  const CoreShell &cs = *fine.cs;
  const PerturbationSeries series = ExpandSeries(cs, fine.lambda0, 4);
  const double l1_oracle = AnnulusLambda1(dc);
  report.checks.push_back(AtMost("lambda1 relative error",
                                 std::abs(series.coeffs.lambda[0] - l1_oracle) / std::abs(l1_oracle),
                                 1e-2));

  // Series against the direct eigensolver.
  const Complex delta = std::polar(1e-2, std::numbers::pi / 4);
  std::vector<Complex> direct(2);
  tasks.clear();
  for (int j = 0; j < 2; j++)
  {
    tasks.emplace_back([&, j] {
      direct[j] = ResonanceNear(cs, delta / double(1 << j), fine.lambda0, series.psi_d).lambda;
    });
  }
  RunParallel(std::move(tasks), opts.threads);
  for (int N = 1; N <= 2; N++)
  {
    const double e0 = std::abs(direct[0] - EvalLambda(series.coeffs, delta, N));
    const double e1 = std::abs(direct[1] - EvalLambda(series.coeffs, delta / 2.0, N));
    report.checks.push_back(Within("remainder ratio N=" + std::to_string(N), e0 / e1,
                                   std::pow(2.0, N), std::pow(2.0, N + 2)));
  }

  // Recursion invariants, each relative to the matching absolute integral.
  const SparseMatrix<double> Mc = AssembleMass(*cs.core);
  const RealVector one_minus_psi = RealVector::Ones(series.psi_d.size()) - series.psi_d;
  double phi_mean = 0.0, psi_mean = 0.0, normalization = 0.0, orthogonality = 0.0;
  for (int n = 1; n <= series.coeffs.Order(); n++)
  {
    const RealVector &phi_r = series.phi_ring[n - 1];
    const RealVector &psi_r = series.psi_ring[n - 1];
    phi_mean = std::max(phi_mean, Ratio(std::abs(cs.shell->Integral(phi_r)),
                                        cs.shell->Integral(RealVector(phi_r.cwiseAbs()))));
    psi_mean = std::max(psi_mean, Ratio(std::abs(cs.core->Integral(psi_r)),
                                        cs.core->Integral(RealVector(psi_r.cwiseAbs()))));
    const RealVector phi = series.Phi(n), psi = series.Psi(n);
    const double norm = cs.shell->Integral(phi) + psi.dot(Mc * series.psi_d);
    const double norm_scale = cs.shell->Integral(RealVector(phi.cwiseAbs())) +
                              psi.cwiseAbs().dot(Mc * series.psi_d.cwiseAbs());
    normalization = std::max(normalization, Ratio(std::abs(norm), norm_scale));
    orthogonality = std::max(
        orthogonality, Ratio(std::abs(psi.dot(Mc * one_minus_psi)),
                             psi.cwiseAbs().dot(Mc * one_minus_psi.cwiseAbs())));
  }
  report.checks.push_back(AtMost("shell fields zero mean", phi_mean, 1e-8));
  report.checks.push_back(AtMost("core fields zero mean", psi_mean, 1e-8));
  report.checks.push_back(AtMost("normalization defect", normalization, 1e-8));
  report.checks.push_back(AtMost("orthogonality defect", orthogonality, 1e-8));

  // Lossy ENZ shell with the SiC parameters.
  const LorentzParams p;
  const CoreDielectric d;
  const Sensitivities sens = ComputeSensitivities(p, d);
  const double a_fd = std::max({std::abs(sens.a1 - sens.a1_fd) / std::abs(sens.a1),
                                std::abs(sens.a2 - sens.a2_fd) / std::abs(sens.a2),
                                std::abs(sens.a3 - sens.a3_fd) / std::abs(sens.a3)});
  report.checks.push_back(AtMost("sensitivities vs finite differences", a_fd, 1e-6));
  report.checks.push_back(
      AtMost("a2 - a1/2 relative", std::abs(sens.a2 - 0.5 * sens.a1) / std::abs(sens.a2), 1e-12));

  const SeriesCoefficients calibrated = CalibrateSeries(series.coeffs, LambdaStar(p, d));
  const ResonanceTrace trace =
      TraceResonance(calibrated, p, d, std::vector<double>{0.0, 1e-4, 4e-4, 6e-3});
  const Complex w1 = trace.omega_prime0;
  report.checks.push_back(AtMost("omega'(0) |Re|/|Im|", Ratio(std::abs(w1.real()), std::abs(w1.imag())),
                                 1e-10));
  report.checks.push_back({"Im omega'(0)", w1.imag(), "< 0", w1.imag() < 0.0});
  const double ws = EnzFrequency(p);
  const auto &pts = trace.points;
  report.checks.push_back(AtMost("trace slope vs omega'(0)",
                                 std::abs((pts[1].omega - ws) / pts[1].gamma - w1) / std::abs(w1),
                                 1e-2));
  const double re_slope = std::log(std::abs(pts[2].omega.real() - ws) /
                                   std::abs(pts[1].omega.real() - ws)) /
                          std::log(pts[2].gamma / pts[1].gamma);
  report.checks.push_back(Within("Re omega - omega* log-log slope", re_slope, 1.8, 2.2));
  report.checks.push_back({"Im omega at gamma 0.006", pts[3].omega.imag(), "< 0",
                           pts[3].omega.imag() < 0.0});

  if (opts.design)
  {
    const DesignLevel &df = designs[0];
    report.checks.push_back(AtMost("design symmetric difference / A0", df.sym_diff / df.A0, 0.05));
    report.checks.push_back(
        AtMost("symmetric difference ratio h/2h, 2h/4h",
               std::max(designs[0].sym_diff / designs[1].sym_diff,
                        designs[1].sym_diff / designs[2].sym_diff),
               1.0 - 1e-12));
    report.checks.push_back(AtMost("design duality gap", df.gap, 1e-6));
    report.checks.push_back(AtMost("design lambda1 relative error",
                                   std::abs(df.lambda1 - l1_oracle) / std::abs(l1_oracle), 2e-2));
    report.checks.push_back(
        {"perturbed |lambda1| margin", df.perturbed_margin, "> 0", df.perturbed_margin > 0.0});
  }
  return report;
}

void WriteReport(const DiskReport &report, std::ostream &out)
{
  out << "validate-disk h = " << report.h << '\n';
  for (const auto &c : report.checks)
  {
    out << (c.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(42) << c.name << ' '
        << std::setw(14) << std::setprecision(6) << c.value << ' ' << c.bound << '\n';
  }
  out << (report.Passed() ? "all checks passed" : "some checks FAILED") << '\n';
}

}  // namespace enzres
