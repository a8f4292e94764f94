// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include "enzres/serialize.hpp"

#include <string>

#include "enzres/error.hpp"

namespace enzres
{

namespace
{

Json Array(const RealVector &v)
{
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Json NodeIds(const DofMap &dofs)
{
  Json ids = Json::array();
  for (std::size_t i = 0; i < dofs.Size(); i++)
  {
    ids.push_back(dofs.Global(i));
  }
  return ids;
}

Json ComplexJson(Complex z)
{
  return Json::array({z.real(), z.imag()});
}

const Json &Require(const Json &doc, const char *key)
{
  if (!doc.is_object() || !doc.contains(key))
  {
    throw ValidationError(std::string("series document: missing key '") + key + "'");
  }
  return doc.at(key);
}

}  // namespace

Json ToJson(const MeshMetrics &metrics)
{
  Json areas = Json::object();
  for (const auto &[region, area] : metrics.area_by_region)
  {
    areas[std::to_string(region)] = area;
  }
  return {{"schema_version", kSchemaVersion},
          {"nodes", metrics.n_nodes},
          {"triangles", metrics.n_triangles},
          {"h_max", metrics.h_max},
          {"area_by_region", areas}};
}

Json ToJson(const PerturbationSeries &series)
{
  const auto &c = series.coeffs;
  Json phi = Json::array(), psi = Json::array();
  for (int n = 0; n < c.Order(); n++)
  {
    phi.push_back(Array(series.phi_ring[n]));
    psi.push_back(Array(series.psi_ring[n]));
  }
  return {{"schema_version", kSchemaVersion},
          {"lambda0", c.lambda0},
          {"lambda", c.lambda},
          {"e", c.e},
          {"normalization", c.normalization},
          {"lambda1_energy", series.lambda1_energy},
          {"defects", series.defects},
          {"fields",
           {{"shell_nodes", NodeIds(*series.shell)},
            {"core_nodes", NodeIds(*series.core)},
            {"psi_d", Array(series.psi_d)},
            {"phi_ring", phi},
            {"psi_ring", psi}}}};
}

SeriesCoefficients SeriesCoefficientsFromJson(const Json &doc)
{
  SeriesCoefficients s;
  try
  {
    const int version = Require(doc, "schema_version").get<int>();
    if (version != kSchemaVersion)
    {
      throw ValidationError("series document: unsupported schema_version " +
                            std::to_string(version));
    }
    s.lambda0 = Require(doc, "lambda0").get<double>();
    s.lambda = Require(doc, "lambda").get<std::vector<double>>();
    s.e = Require(doc, "e").get<std::vector<double>>();
    s.normalization = Require(doc, "normalization").get<double>();
  }
  catch (const nlohmann::json::exception &ex)
  {
    throw ValidationError(std::string("series document: ") + ex.what());
  }
  if (s.lambda.empty() || s.lambda.size() != s.e.size())
  {
    throw ValidationError("series document: 'lambda' and 'e' must be nonempty and of equal length");
  }
  if (!(s.lambda0 > 0.0) || !(s.normalization > 0.0))
  {
    throw ValidationError("series document: lambda0 and normalization must be positive");
  }
  return s;
}

Json ToJson(const ResonanceTrace &trace)
{
  Json points = Json::array();
  for (const auto &p : trace.points)
  {
    points.push_back({{"gamma", p.gamma},
                      {"omega", ComplexJson(p.omega)},
                      {"delta", ComplexJson(p.delta)},
                      {"lambda", ComplexJson(p.lambda)},
                      {"newton_iters", p.newton_iters}});
  }
  return {{"schema_version", kSchemaVersion},
          {"omega_prime0", ComplexJson(trace.omega_prime0)},
          {"points", points}};
}

Json ToJson(const DesignProblem &prob, const DesignState &state)
{
  Json history = Json::array();
  for (const auto &r : state.history)
  {
    // −∞ primal values (infeasible support) are written as null.
    history.push_back({{"primal", std::isfinite(r.primal) ? Json(r.primal) : Json()},
                       {"dual", r.dual}});
  }
  Json doc = {{"schema_version", kSchemaVersion},
              {"lambda0", prob.Lambda0()},
              {"A0", prob.A0()},
              {"primal", state.primal},
              {"dual", state.dual},
              {"converged", state.converged},
              {"fractional_area", state.fractional_area},
              {"z0", state.z0},
              {"nodes", NodeIds(prob.Dofs())},
              {"theta", Array(state.theta)},
              {"theta_shape", Array(state.theta_shape)},
              {"w", Array(state.w)},
              {"history", history}};
  if (prob.PsiDSquared())
  {
    doc["lambda1"] = Lambda1OfDesign(state, prob);
  }
  return doc;
}

}  // namespace enzres
