// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "enzres/design.hpp"
#include "enzres/dispersion.hpp"
#include "enzres/error.hpp"
#include "enzres/mesh.hpp"
#include "enzres/perturbation.hpp"
#include "enzres/serialize.hpp"
#include "enzres/validation.hpp"

using namespace enzres;

namespace
{

// Writes to `path`, or stdout when empty.
void Emit(const std::string &path, const std::function<void(std::ostream &)> &write)
{
  if (path.empty())
  {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw ValidationError("cannot open output file " + path);
  }
  write(out);
  if (!out)
  {
    throw SolverError("write failed: " + path);
  }
}

void EmitJson(const std::string &path, const Json &doc)
{
  Emit(path, [&](std::ostream &out) { out << doc.dump(2) << '\n'; });
}

std::shared_ptr<const Mesh> ReadMesh(const std::string &path)
{
  return std::make_shared<const Mesh>(LoadMeshFile(path));
}

Json ReadJson(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ValidationError("cannot open " + path);
  }
  try
  {
    return Json::parse(in);
  }
  catch (const nlohmann::json::parse_error &ex)
  {
    throw ValidationError(path + ": " + ex.what());
  }
}

struct MeshArgs
{
  std::string kind = "concentric";
  double rd = 1.0, r0 = 2.0, h = 0.05;
  std::optional<double> rbox;
  std::string in, out;
};

struct Lambda0Args
{
  std::string mesh;
  double lo = 0.0, hi = 0.0, tol = 1e-10;
};

struct ExpandArgs
{
  std::string mesh, out;
  std::optional<double> lambda0;
  double lo = 6.0, hi = 14.0;
  int order = 4;
};

struct ResonateArgs
{
  std::string series, out;
  LorentzParams lorentz;
  CoreDielectric core;
  double gamma_max = 0.006;
  int steps = 12;
  bool json = false;
};

struct OptimizeArgs
{
  std::string mesh, out, csv, method = "dual";
  double h = 0.05, r_box = 2.0, lambda0 = 9.0, gap_tol = 1e-6;
  DualOptions dual;
  SaddleOptions saddle;
};

struct ValidateArgs
{
  double h = 0.02;
  bool no_design = false;
};

int RunMesh(const MeshArgs &a)
{
  Mesh mesh = a.kind == "file" ? MakeMesh(MeshFileSpec{a.in})
                               : MakeMesh(ConcentricSpec{a.rd, a.r0, a.rbox, a.h});
  if (!a.out.empty())
  {
    SaveMeshFile(mesh, a.out);
  }
  std::cout << ToJson(ComputeMeshMetrics(mesh)).dump(2) << '\n';
  return 0;
}

int RunLambda0(const Lambda0Args &a)
{
  CoreShell cs(ReadMesh(a.mesh));
  const double lambda0 = FindLambda0(cs, a.lo, a.hi, a.tol);
  EmitJson("", {{"schema_version", kSchemaVersion},
                {"lambda0", lambda0},
                {"residual", ConsistencyResidual(cs, lambda0)}});
  return 0;
}

int RunExpand(const ExpandArgs &a)
{
  CoreShell cs(ReadMesh(a.mesh));
  const double lambda0 = a.lambda0 ? *a.lambda0 : FindLambda0(cs, a.lo, a.hi);
  EmitJson(a.out, ToJson(ExpandSeries(cs, lambda0, a.order)));
  return 0;
}

int RunResonate(const ResonateArgs &a)
{
  const SeriesCoefficients raw = SeriesCoefficientsFromJson(ReadJson(a.series));
  const SeriesCoefficients s = CalibrateSeries(raw, LambdaStar(a.lorentz, a.core));
  const ResonanceTrace trace = TraceResonance(s, a.lorentz, a.core, a.gamma_max, a.steps);
  if (a.json)
  {
    EmitJson(a.out, ToJson(trace));
  }
  else
  {
    Emit(a.out, [&](std::ostream &out) { WriteTraceCsv(trace, out); });
  }
  return 0;
}

int RunOptimize(const OptimizeArgs &a)
{
  const DesignProblem prob = a.mesh.empty() ? MakeDiskDesignProblem(a.h, a.r_box, a.lambda0)
                                            : MakeDesignProblem(ReadMesh(a.mesh), a.lambda0);
  const DesignState state =
      a.method == "saddle" ? SaddleSolve(prob, a.saddle) : OptimizeDesign(prob, a.dual, a.gap_tol);
  EmitJson(a.out, ToJson(prob, state));
  if (!a.csv.empty())
  {
    Emit(a.csv, [&](std::ostream &out) { WriteDesignCsv(prob, state, out); });
  }
  return state.converged ? 0 : 1;
}

int RunValidate(const ValidateArgs &a)
{
  DiskOptions opts;
  opts.h = a.h;
  opts.threads = ThreadsFromEnv();
  opts.design = !a.no_design;
  const DiskReport report = ValidateDisk(opts);
  WriteReport(report, std::cout);
  return report.Passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"enzres: ENZ core-shell resonances"};
  // -h is taken by the mesh size option.
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  auto positive = CLI::PositiveNumber;

  MeshArgs mesh;
  auto *cmd_mesh = app.add_subcommand("mesh", "build or copy a mesh and print its metrics");
  cmd_mesh->add_option("--kind", mesh.kind)->check(CLI::IsMember({"concentric", "file"}));
  cmd_mesh->add_option("--rd", mesh.rd, "core radius")->check(positive);
  cmd_mesh->add_option("--r0", mesh.r0, "outer shell radius")->check(positive);
  cmd_mesh->add_option("--rbox", mesh.rbox, "outer radius of the design slack");
  cmd_mesh->add_option("--h", mesh.h, "target edge length")->check(positive);
  cmd_mesh->add_option("--in", mesh.in, "input mesh (kind file)");
  cmd_mesh->add_option("-o,--out", mesh.out, "output mesh");

  Lambda0Args l0;
  auto *cmd_l0 = app.add_subcommand("lambda0", "solve the consistency condition for lambda0");
  cmd_l0->add_option("--mesh", l0.mesh)->required();
  cmd_l0->add_option("--lo", l0.lo)->required();
  cmd_l0->add_option("--hi", l0.hi)->required();
  cmd_l0->add_option("--tol", l0.tol)->check(positive);

  ExpandArgs ex;
  auto *cmd_ex = app.add_subcommand("expand", "perturbation series in the shell permittivity");
  cmd_ex->add_option("--mesh", ex.mesh)->required();
  cmd_ex->add_option("--lambda0", ex.lambda0, "default: root in [lo, hi]");
  cmd_ex->add_option("--lo", ex.lo);
  cmd_ex->add_option("--hi", ex.hi);
  cmd_ex->add_option("--order", ex.order)->check(CLI::Range(1, 64));
  cmd_ex->add_option("-o,--out", ex.out);

  ResonateArgs rs;
  auto *cmd_rs = app.add_subcommand("resonate", "trace the complex resonance frequency in gamma");
  cmd_rs->add_option("--series", rs.series)->required();
  cmd_rs->add_option("--eps-inf", rs.lorentz.eps_inf);
  cmd_rs->add_option("--omega-p", rs.lorentz.omega_p);
  cmd_rs->add_option("--omega-0", rs.lorentz.omega_0);
  cmd_rs->add_option("--eps-d", rs.core.eps_d);
  cmd_rs->add_option("--gamma-max", rs.gamma_max);
  cmd_rs->add_option("--steps", rs.steps);
  cmd_rs->add_flag("--json", rs.json, "JSON instead of CSV");
  cmd_rs->add_option("-o,--out", rs.out);

  OptimizeArgs op;
  auto *cmd_op = app.add_subcommand("optimize", "optimal shell for a given core");
  cmd_op->add_option("--mesh", op.mesh, "design mesh; default: disk problem");
  cmd_op->add_option("--h", op.h)->check(positive);
  cmd_op->add_option("--r-box", op.r_box)->check(positive);
  cmd_op->add_option("--lambda0", op.lambda0);
  cmd_op->add_option("--method", op.method)->check(CLI::IsMember({"dual", "saddle"}));
  cmd_op->add_option("--gap-tol", op.gap_tol)->check(positive);
  cmd_op->add_option("--beta-tol", op.dual.beta_tol)->check(positive);
  cmd_op->add_option("--tol", op.dual.tol)->check(positive);
  cmd_op->add_option("--iterations", op.saddle.iterations);
  cmd_op->add_option("-o,--out", op.out);
  cmd_op->add_option("--csv", op.csv, "per-element design CSV");

  ValidateArgs va;
  auto *cmd_va = app.add_subcommand("validate-disk", "disk oracle suite");
  cmd_va->add_option("--h", va.h)->check(positive);
  cmd_va->add_flag("--no-design", va.no_design);

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp &e)
  {
    return app.exit(e);
  }
  catch (const CLI::CallForAllHelp &e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError &e)
  {
    app.exit(e);
    return 2;
  }

  try
  {
    if (*cmd_mesh)
    {
      return RunMesh(mesh);
    }
    if (*cmd_l0)
    {
      return RunLambda0(l0);
    }
    if (*cmd_ex)
    {
      return RunExpand(ex);
    }
    if (*cmd_rs)
    {
      return RunResonate(rs);
    }
    if (*cmd_op)
    {
      return RunOptimize(op);
    }
    return RunValidate(va);
  }
  catch (const ValidationError &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  catch (const std::exception &e)
  {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
