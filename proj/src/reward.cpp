#include "fairsl/reward.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>

#include "fairsl/error.hpp"
#include "fairsl/likelihood.hpp"
#include "fairsl/pipeline.hpp"

namespace fairsl {

namespace {

InferenceOptions inference_options(const Dataset& data, const ObjectiveConfig& objective,
                                   const RewardOptions& options) {
  InferenceOptions inf;
  inf.admm = options.admm;
  inf.fair = {objective.mode == ObjectiveMode::relational ? FairMetric::relational_all : FairMetric::non_parity};
  inf.delta = objective.delta;
  inf.fair_target = data.fair_target;
  return inf;
}

double odds_sum(const Assignment& preds, const Assignment& truth, const GroupSpec& groups, std::string& note) {
  auto gaps = equalized_odds(preds, truth, groups);
  if (!gaps.pos) note += "eo_pos undefined; ";
  if (!gaps.neg) note += "eo_neg undefined; ";
  return gaps.pos.value_or(0.0) + gaps.neg.value_or(0.0);
}

}  // namespace

RewardBreakdown score_candidate(const RuleSet& rules, const Dataset& train, const ObjectiveConfig& objective,
                                const SignalSets& signals, const RewardOptions& options,
                                const Dataset* validation) {
  validate(objective);
  if (rules.clauses.empty()) throw Error("cannot score an empty clause set");
  if (train.fair_target.empty()) throw Error("dataset has no fair target predicate");
  const Database& db = train.db;
  check_truth(train.truth, db.num_targets());

  RewardBreakdown out;
  out.rules = rules;
  auto potentials = ground_ruleset(rules, db);
  std::vector<double> weights;
  for (const auto& c : rules.clauses) weights.push_back(c.weight);
  if (objective.weight_mode == WeightMode::per_candidate)
    weights = learn_clause_weights(potentials, std::move(weights), train.truth, db.num_targets(), options.weights);
  else
    apply_weights(potentials, rules);
  for (std::size_t c = 0; c < weights.size(); ++c) out.rules.clauses[c].weight = weights[c];

  if (objective.likelihood == LikelihoodTerm::pseudo) {
    PseudoLikelihood pl(potentials, db.num_targets());
    out.likelihood = db.num_targets() ? pl.log_likelihood(train.truth) / static_cast<double>(db.num_targets()) : 0.0;
  } else if (objective.likelihood == LikelihoodTerm::energy) {
    out.likelihood = -total_energy(potentials, train.truth);
  }
  if (objective.mode == ObjectiveMode::relational) out.prior = interpretability_prior(out.rules, objective, signals);

  try {
    auto inf = inference_options(train, objective, options);
    GroupSpec groups = group_spec(db, inf.fair_target);
    auto constraints = build_delta_constraints(inf.fair.front(), groups, inf.delta);
    auto map = map_inference(potentials, constraints, db.num_targets(), inf.admm);
    out.predictions = map.assignment;
    out.diagnostics = map.diagnostics;
    out.report = fairness_report(out.predictions, &train.truth, groups);
    if (objective.likelihood == LikelihoodTerm::two_point && db.num_targets()) {
      // Mean per target predicate, then across predicates.
      PseudoLikelihood pl(potentials, db.num_targets());
      Eigen::VectorXd terms = pl.two_point_terms(train.truth, out.predictions);
      std::map<int, std::pair<double, int>> by_predicate;
      for (int i = 0; i < static_cast<int>(db.num_targets()); ++i) {
        auto& [sum, count] = by_predicate[db.target_atom(i).predicate];
        sum += terms[i];
        ++count;
      }
      double total = 0.0;
      for (const auto& [pred, acc] : by_predicate) total += acc.first / acc.second;
      out.likelihood = total / static_cast<double>(by_predicate.size());
    }

    if (objective.mode == ObjectiveMode::relational) {
      if (objective.odds_fold == OddsFold::validation && validation) {
        auto val = predict(out.rules, validation->db, inference_options(*validation, objective, options));
        out.odds = odds_sum(val.map.assignment, validation->truth, val.groups, out.diagnostic);
      } else {
        out.odds = odds_sum(out.predictions, train.truth, groups, out.diagnostic);
      }
    } else {
      try {
        out.over = overestimation(out.predictions, train.truth, groups).value;
      } catch (const UndefinedMetric& e) {
        out.diagnostic += std::string(e.what()) + "; ";
      }
    }
  } catch (const InfeasibleError& e) {
    out.failed = true;
    out.diagnostic = e.what();
  }
  return out;
}

double combine_reward(const RewardBreakdown& breakdown, const ObjectiveConfig& objective) {
  if (breakdown.failed) return -std::numeric_limits<double>::infinity();
  if (objective.mode == ObjectiveMode::relational)
    return breakdown.likelihood - breakdown.prior - objective.alpha_odds * breakdown.odds;
  return breakdown.likelihood - objective.alpha_over * breakdown.over;
}

RewardFunction make_reward_function(const Dataset& train, const ObjectiveConfig& objective, SignalSets signals,
                                    RewardOptions options, const Dataset* validation) {
  struct Memo {
    std::mutex mu;
    std::map<std::string, double> values;
  };
  auto memo = std::make_shared<Memo>();
  return [&train, objective, signals = std::move(signals), options = std::move(options), validation,
          memo](const std::vector<Clause>& clauses) {
    const std::string key = clause_set_key(clauses);
    {
      std::lock_guard lock(memo->mu);
      auto it = memo->values.find(key);
      if (it != memo->values.end()) return it->second;
    }
    RuleSet rules{clauses, train.db.schema()};
    double r = combine_reward(score_candidate(rules, train, objective, signals, options, validation), objective);
    std::lock_guard lock(memo->mu);
    memo->values.emplace(key, r);
    return r;
  };
}

}  // namespace fairsl
