#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fairsl/grounding.hpp"

namespace fairsl {

enum class Sense { greater_equal, less_equal };

/// <coefficients, y> (>= | <=) bound over target atoms.
struct LinearConstraint {
  SparseCoefficients coefficients;
  Sense sense = Sense::less_equal;
  double bound = 0.0;
  std::string label;
};

/// Signed amount by which y violates the constraint (<= 0 when satisfied).
double constraint_violation(const LinearConstraint& constraint, const Assignment& y);

struct AdmmParams {
  double step_size = 1.0;
  double primal_tol = 1e-5;
  double dual_tol = 1e-5;
  int max_iterations = 25000;
  double initial_value = 0.5;
};

void validate(const AdmmParams& params);

struct InferenceDiagnostics {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
  /// Largest constraint violation at the returned point, divided by the
  /// constraint's coefficient 2-norm.
  double max_constraint_violation = 0.0;
};

struct InferenceResult {
  Assignment assignment;
  double energy = 0.0;
  InferenceDiagnostics diagnostics;
};

/// MAP inference: minimizes the total energy over [0,1]^n subject to the
/// linear constraints by consensus ADMM. Every potential and every constraint
/// is an agent holding local copies of its variables; potentials take a
/// closed-form hinge proximal step, constraints project onto their half-space
/// and the consensus step averages and clips to [0,1].
///
/// Residuals are max-norms: primal = max |local - consensus|, dual =
/// step_size * max |consensus change|. Throws InfeasibleError when a single
/// constraint cannot be met anywhere in the box. When max_iterations is hit
/// the last iterate is returned with converged = false.
///
/// `start`, when given, replaces initial_value as the starting consensus point.
InferenceResult map_inference(std::span<const GroundPotential> potentials,
                              std::span<const LinearConstraint> constraints, std::size_t n_targets,
                              const AdmmParams& params, const Assignment* start = nullptr);

struct BruteForceResult {
  Assignment assignment;
  double energy = 0.0;
};

/// Exhaustive search over the grid {0, r, ..., 1}^n (n <= 4) returning the
/// lexicographically smallest minimum-energy feasible point. Testing oracle.
BruteForceResult brute_force_map(std::span<const GroundPotential> potentials,
                                 std::span<const LinearConstraint> constraints, std::size_t n_targets,
                                 double resolution);

}  // namespace fairsl
