#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairsl/database.hpp"
#include "fairsl/fairness.hpp"
#include "fairsl/inference.hpp"
#include "fairsl/pipeline.hpp"
#include "fairsl/weight_learning.hpp"

namespace fairsl {

/// Area under the ROC curve by the trapezoidal rule; tied scores form one
/// diagonal segment, which equals the average-rank statistic. Labels are 0/1.
/// UndefinedMetric without both classes.
double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Area under the precision-recall curve for the positive class, trapezoidal
/// from (recall 0, precision 1) through one point per distinct score.
/// UndefinedMetric without positives.
double auc_pr(const std::vector<double>& scores, const std::vector<int>& labels);

/// Fold of each entity: names are sorted, shuffled with the seed and dealt
/// round-robin, so the result ignores input order.
std::map<std::string, int> assign_folds(std::vector<std::string> entities, int folds, std::uint64_t seed);

struct EvalOptions {
  int folds = 5;
  std::uint64_t seed = 0;
  bool learn_weights = true;
  WeightLearningParams weights;
  InferenceOptions inference;
  double threshold = 0.5;
};

struct FoldResult {
  int fold = 0;
  std::optional<double> auc_roc;
  std::optional<double> auc_pr_protected;
  std::optional<double> auc_pr_unprotected;
  FairnessReport report;
  InferenceDiagnostics diagnostics;
};

/// k-fold cross-validation over the group-labelled entities: weights are
/// learned on the atoms not mentioning the test entities and inference runs
/// on the atoms not mentioning the training entities. Scores are taken over
/// the fair-target atoms.
std::vector<FoldResult> cross_validate(const Dataset& data, const RuleSet& rules, const EvalOptions& options);

/// Per-fold rows followed by mean and standard deviation.
std::string format_cross_validation(const std::vector<FoldResult>& folds);

/// AUC-ROC over the fair-target atoms of `groups` (both groups), truth
/// binarized at `threshold`.
double group_auc_roc(const Assignment& preds, const Assignment& truth, const GroupSpec& groups,
                     double threshold = 0.5);

}  // namespace fairsl
