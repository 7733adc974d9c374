#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fairsl/database.hpp"
#include "fairsl/fairness.hpp"
#include "fairsl/grounding.hpp"
#include "fairsl/inference.hpp"
#include "fairsl/relational.hpp"

namespace fairsl {

struct InferenceOptions {
  AdmmParams admm;
  /// Fairness constraints on MAP inference; none when empty.
  std::vector<FairMetric> fair;
  double delta = 0.1;
  /// Predicate whose atoms are grouped for the constraints and the report.
  std::string fair_target;
};

struct Prediction {
  std::vector<GroundPotential> potentials;
  std::vector<LinearConstraint> constraints;
  GroupSpec groups;
  InferenceResult map;
};

/// Parses `none`, `nonparity` or a comma-separated subset of `rd,rr,rc`.
std::vector<FairMetric> parse_fair_list(std::string_view text);

/// Grounds the weighted rules and runs (constrained) MAP inference.
Prediction predict(const RuleSet& weighted, const Database& db, const InferenceOptions& options);

}  // namespace fairsl
