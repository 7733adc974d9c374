#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fairsl/database.hpp"
#include "fairsl/grounding.hpp"
#include "fairsl/inference.hpp"
#include "fairsl/relational.hpp"

namespace fairsl {

enum class WeightMethod {
  /// Gradient ascent on the pseudo-log-likelihood of the truth.
  pseudo_likelihood,
  /// lambda_c += rate * (Phi_c(MAP) - Phi_c(truth)) with unconstrained MAP.
  perceptron
};

struct WeightLearningParams {
  int iterations = 25;
  double rate = 0.1;
  WeightMethod method = WeightMethod::pseudo_likelihood;
  AdmmParams admm;
};

void validate(const WeightLearningParams& params);

/// Throws Error unless `truth` has one value in [0,1] per target.
void check_truth(const Assignment& truth, std::size_t n_targets);

/// Sum of potential values per clause (unweighted).
std::vector<double> clause_potentials(std::span<const GroundPotential> potentials, const Assignment& y,
                                      std::size_t n_clauses);

/// Learns clause weights on already grounded potentials, starting from
/// `weights` and projecting onto weights >= 0 after every update. The
/// potentials' weights are left at the learned values.
///
/// The pseudo-likelihood step for clause c is rate * grad_c / n_c, where n_c is
/// the number of groundings of c, so the step size does not scale with data.
std::vector<double> learn_clause_weights(std::span<GroundPotential> potentials, std::vector<double> weights,
                                         const Assignment& truth, std::size_t n_targets,
                                         const WeightLearningParams& params);

/// Grounds `rules` on `db` and returns a copy with learned weights.
RuleSet learn_weights(const RuleSet& rules, const Database& db, const Assignment& truth,
                      const WeightLearningParams& params = {});

}  // namespace fairsl
