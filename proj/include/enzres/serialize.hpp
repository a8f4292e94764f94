// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ENZRES_SERIALIZE_HPP
#define ENZRES_SERIALIZE_HPP

#include <json.hpp>

#include "enzres/design.hpp"
#include "enzres/dispersion.hpp"
#include "enzres/mesh.hpp"
#include "enzres/perturbation.hpp"

namespace enzres
{

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

Json ToJson(const MeshMetrics &metrics);

// Coefficients plus the fields by order as node arrays (shell and core node
// ids are listed once).
Json ToJson(const PerturbationSeries &series);

// Reads the coefficient part of a series document; the fields are ignored.
SeriesCoefficients SeriesCoefficientsFromJson(const Json &doc);

Json ToJson(const ResonanceTrace &trace);

// θ per element, w per node, z0 and the objective history.
Json ToJson(const DesignProblem &prob, const DesignState &state);

}  // namespace enzres

#endif  // ENZRES_SERIALIZE_HPP
