#include "fairsl/weight_learning.hpp"

#include <algorithm>
#include <cmath>

#include "fairsl/error.hpp"
#include "fairsl/likelihood.hpp"

namespace fairsl {

void validate(const WeightLearningParams& params) {
  if (params.iterations < 0) throw Error("weight learning iterations must be >= 0");
  if (!(params.rate >= 0.0) || !std::isfinite(params.rate)) throw Error("weight learning rate must be >= 0");
  validate(params.admm);
}

void check_truth(const Assignment& truth, std::size_t n_targets) {
  if (truth.size() != static_cast<Eigen::Index>(n_targets))
    throw Error("truth covers " + std::to_string(truth.size()) + " atoms, expected " + std::to_string(n_targets));
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (std::isnan(truth[i])) throw Error("missing truth value for target " + std::to_string(i));
    if (truth[i] < 0.0 || truth[i] > 1.0) throw Error("truth value outside [0,1] for target " + std::to_string(i));
  }
}

std::vector<double> clause_potentials(std::span<const GroundPotential> potentials, const Assignment& y,
                                      std::size_t n_clauses) {
  std::vector<double> phi(n_clauses, 0.0);
  for (const auto& p : potentials) phi.at(static_cast<std::size_t>(p.clause)) += potential_value(p, y);
  return phi;
}

std::vector<double> learn_clause_weights(std::span<GroundPotential> potentials, std::vector<double> weights,
                                         const Assignment& truth, std::size_t n_targets,
                                         const WeightLearningParams& params) {
  validate(params);
  check_truth(truth, n_targets);
  const std::size_t n_clauses = weights.size();
  auto set_weights = [&] {
    for (auto& p : potentials) p.weight = weights.at(static_cast<std::size_t>(p.clause));
  };
  set_weights();
  if (params.iterations == 0 || params.rate == 0.0) return weights;

  if (params.method == WeightMethod::perceptron) {
    const auto phi_truth = clause_potentials(potentials, truth, n_clauses);
    Assignment warm;
    for (int it = 0; it < params.iterations; ++it) {
      auto map = map_inference(potentials, {}, n_targets, params.admm, warm.size() ? &warm : nullptr);
      const auto phi_map = clause_potentials(potentials, map.assignment, n_clauses);
      for (std::size_t c = 0; c < n_clauses; ++c)
        weights[c] = std::max(0.0, weights[c] + params.rate * (phi_map[c] - phi_truth[c]));
      warm = std::move(map.assignment);
      set_weights();
    }
    return weights;
  }

  std::vector<double> groundings(n_clauses, 0.0);
  for (const auto& p : potentials) groundings.at(static_cast<std::size_t>(p.clause)) += 1.0;
  PseudoLikelihood pl(potentials, n_targets);
  for (int it = 0; it < params.iterations; ++it) {
    const auto grad = pl.clause_gradient(truth, n_clauses);
    for (std::size_t c = 0; c < n_clauses; ++c)
      if (groundings[c] > 0.0) weights[c] = std::max(0.0, weights[c] + params.rate * grad[c] / groundings[c]);
    set_weights();
  }
  return weights;
}

RuleSet learn_weights(const RuleSet& rules, const Database& db, const Assignment& truth,
                      const WeightLearningParams& params) {
  auto potentials = ground_ruleset(rules, db);
  std::vector<double> weights;
  for (const auto& c : rules.clauses) weights.push_back(c.weight);
  weights = learn_clause_weights(potentials, std::move(weights), truth, db.num_targets(), params);
  RuleSet out = rules;
  for (std::size_t c = 0; c < weights.size(); ++c) out.clauses[c].weight = weights[c];
  return out;
}

}  // namespace fairsl
