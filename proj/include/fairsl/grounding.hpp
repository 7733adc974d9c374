#pragma once

#include <span>
#include <utility>
#include <vector>

#include "fairsl/database.hpp"
#include "fairsl/relational.hpp"

namespace fairsl {

/// Sparse linear form over target atoms: (target index, coefficient) pairs
/// sorted by index with no zero coefficients.
using SparseCoefficients = std::vector<std::pair<int, double>>;

/// phi(y) = max{0, <coefficients, y> + constant}^exponent, scaled by weight in the energy.
struct GroundPotential {
  SparseCoefficients coefficients;
  double constant = 0.0;
  int exponent = 1;
  double weight = 1.0;
  int clause = -1;  // originating clause within its rule set
};

/// Sorts by index and merges duplicate indices, dropping zeros.
SparseCoefficients canonicalize(SparseCoefficients terms);

/// <coefficients, y> + constant. Throws Error when an index is outside y.
double linear_value(const SparseCoefficients& coefficients, double constant, const Assignment& y);

double potential_value(const GroundPotential& potential, const Assignment& y);

/// Sum of weight * potential_value; the unnormalized log density is its negation.
double total_energy(std::span<const GroundPotential> potentials, const Assignment& y);

/// Grounds one clause with the Lukasiewicz relaxation: for b_1 & ... & b_k -> h
/// the distance to satisfaction is sum v(b_i) - (k-1) - v(h), a negated
/// literal contributing 1 - x. Observed atoms fold into the constant and
/// groundings that cannot be violated anywhere in the unit box are dropped.
///
/// Variables range over the constants seen at their argument positions. A
/// head variable that does not occur in the body and whose head position has
/// never held a constant throws Error("unbound head variable").
std::vector<GroundPotential> ground_clause(const Clause& clause, const Database& db, int clause_index = -1);

/// Grounds every clause; potential.clause is the clause's position in `rules`.
std::vector<GroundPotential> ground_ruleset(const RuleSet& rules, const Database& db);

/// Copies clause weights of `rules` into the potentials that came from them.
void apply_weights(std::span<GroundPotential> potentials, const RuleSet& rules);

}  // namespace fairsl
