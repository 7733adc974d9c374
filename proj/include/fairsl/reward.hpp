#pragma once

#include <string>

#include "fairsl/database.hpp"
#include "fairsl/fairness.hpp"
#include "fairsl/inference.hpp"
#include "fairsl/search.hpp"
#include "fairsl/weight_learning.hpp"

namespace fairsl {

struct RewardOptions {
  WeightLearningParams weights;
  AdmmParams admm;
};

/// Components of a candidate's reward, kept apart so the objective weights
/// can be changed without rerunning the pipeline.
struct RewardBreakdown {
  bool failed = false;
  std::string diagnostic;
  /// Mean pseudo-log-likelihood of the truth per target atom, or the
  /// negated total energy of the truth.
  double likelihood = 0.0;
  double prior = 0.0;
  /// eo_pos + eo_neg of the constrained predictions; undefined parts count 0.
  double odds = 0.0;
  double over = 0.0;
  RuleSet rules;  // with the weights used for inference
  Assignment predictions;
  FairnessReport report;
  InferenceDiagnostics diagnostics;
};

/// Ground, learn weights (per_candidate mode), run fairness-constrained MAP
/// (RD, RR and RC for relational mode, non-parity for recommender mode) and
/// score. An infeasible constraint system marks the breakdown failed instead
/// of throwing. `validation` supplies the equalized-odds fold when the
/// objective asks for it.
RewardBreakdown score_candidate(const RuleSet& rules, const Dataset& train, const ObjectiveConfig& objective,
                                const SignalSets& signals, const RewardOptions& options,
                                const Dataset* validation = nullptr);

/// likelihood - prior - alpha_odds * odds (relational) or
/// likelihood - alpha_over * over (recommender); -infinity when failed.
double combine_reward(const RewardBreakdown& breakdown, const ObjectiveConfig& objective);

/// Memoized reward for structure search over `train`. Thread-safe.
RewardFunction make_reward_function(const Dataset& train, const ObjectiveConfig& objective, SignalSets signals,
                                    RewardOptions options, const Dataset* validation = nullptr);

}  // namespace fairsl
