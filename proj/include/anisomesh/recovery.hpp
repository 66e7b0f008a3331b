#pragma once

#include "anisomesh/fields.hpp"
#include "anisomesh/mesh.hpp"
#include "anisomesh/metric.hpp"

namespace aniso {

/// Per-cell constant P1 gradient of the field.
Vec3 cell_gradient(const SimplicialMesh& mesh, const ScalarField& u, int c);

/// Clement gradient recovery: cell-measure-weighted average of the constant
/// cell gradients over each vertex star. Exact for linear fields.
/// Throws std::runtime_error naming any vertex with an empty star.
VectorField clement_gradient(const SimplicialMesh& mesh, const ScalarField& u);

/// Two Clement applications (gradient, then gradient of each component),
/// symmetrized per vertex. The result may be indefinite.
MetricField recover_hessian(const SimplicialMesh& mesh, const ScalarField& u);

/// Full error-metric pipeline: recovered Hessian -> eigenvalue modulus ->
/// L^p normalization to opts.target_complexity (with size bounds) ->
/// gradation -> final bound enforcement. Returns a ready-to-adapt SPD field.
MetricField hessian_metric(const SimplicialMesh& mesh, const ScalarField& u,
                           const AdaptOptions& opts);

}  // namespace aniso
