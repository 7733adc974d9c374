#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairsl/database.hpp"
#include "fairsl/inference.hpp"

namespace fairsl {

/// Target atoms split by the group of the entity they concern. For rating
/// predicates `item_of[target]` names the item of each rating (-1 otherwise).
struct GroupSpec {
  std::vector<int> protected_atoms;
  std::vector<int> unprotected_atoms;
  std::vector<int> item_of;

  double g1() const { return static_cast<double>(protected_atoms.size()); }
  double g2() const { return static_cast<double>(unprotected_atoms.size()); }
};

/// Groups the target atoms of `predicate` by the first argument whose constant
/// carries a group label; the next remaining argument, if any, is the item.
/// Atoms with no labelled argument are left out.
GroupSpec group_spec(const Database& db, std::string_view predicate);

/// Same as above for atoms given as text, e.g. the rows of a predictions file.
/// `atoms[i]` is target i. An empty `predicate` accepts every atom.
GroupSpec group_spec(const std::vector<std::string>& atoms, const std::map<std::string, GroupLabel>& groups,
                     std::string_view predicate = {});

GroupSpec swap_groups(const GroupSpec& groups);

Assignment binarize(const Assignment& preds, double threshold);

struct GroupRates {
  double protected_rate = 0.0;
  double unprotected_rate = 0.0;
};

/// Denial (negative prediction) proportions per group. With a threshold the
/// predictions are binarized first; without one denial is 1 - y.
GroupRates denial_rates(const Assignment& preds, const GroupSpec& groups,
                        std::optional<double> threshold = 0.5);

/// p1 - p2 over denial rates.
double risk_difference(const Assignment& preds, const GroupSpec& groups, std::optional<double> threshold = 0.5);
/// p1 / p2; UndefinedMetric when p2 = 0.
double risk_ratio(const Assignment& preds, const GroupSpec& groups, std::optional<double> threshold = 0.5);
/// (1 - p1) / (1 - p2); UndefinedMetric when p2 = 1.
double relative_chance(const Assignment& preds, const GroupSpec& groups, std::optional<double> threshold = 0.5);

/// Favorable-rate difference, protected minus unprotected.
double statistical_parity_difference(const Assignment& preds, const GroupSpec& groups, double threshold = 0.5);
/// Favorable-rate ratio, protected over unprotected.
double disparate_impact(const Assignment& preds, const GroupSpec& groups, double threshold = 0.5);

/// Absolute TPR gap (pos) and FPR gap (neg). A component is empty when one of
/// its strata has no members. Truth is binarized with the same threshold.
struct OddsGaps {
  std::optional<double> pos;
  std::optional<double> neg;
};
OddsGaps equalized_odds(const Assignment& preds, const Assignment& truth, const GroupSpec& groups,
                        double threshold = 0.5);
/// Signed TPR gap, protected minus unprotected.
double equal_opportunity_difference(const Assignment& preds, const Assignment& truth, const GroupSpec& groups,
                                    double threshold = 0.5);
/// (FPR gap + TPR gap) / 2, signed.
double average_odds_difference(const Assignment& preds, const Assignment& truth, const GroupSpec& groups,
                               double threshold = 0.5);

/// |mean protected prediction - mean unprotected prediction| on raw values.
double non_parity(const Assignment& preds, const GroupSpec& groups);

struct Overestimation {
  double value = 0.0;
  int items = 0;    // items used
  int skipped = 0;  // items lacking a rating from one of the groups
};
/// Mean over items of |max(0, prot. overestimate) - max(0, unprot. overestimate)|.
Overestimation overestimation(const Assignment& preds, const Assignment& truth, const GroupSpec& groups);

enum class FairMetric { rd, rr, rc, non_parity, relational_all };

FairMetric parse_fair_metric(std::string_view name);

/// Linear constraints over the continuous target values holding the metric
/// in its delta band: |RD| <= delta, 1 - delta <= RR, RC <= 1 + delta,
/// |non-parity| <= delta. relational_all yields the RD, RR and RC constraints.
std::vector<LinearConstraint> build_delta_constraints(FairMetric metric, const GroupSpec& groups, double delta);

struct FairnessReport {
  std::optional<double> rd, rr, rc, spd, di;
  std::optional<double> eo_pos, eo_neg, eq_opportunity, avg_odds;
  std::optional<double> non_parity, overestimation;
  /// Empty when the rate metrics were taken on continuous values.
  std::optional<double> threshold;
};

/// Every metric that is defined for the inputs. `truth` may be null or hold
/// NaN, in which case the truth-based metrics are left empty.
FairnessReport fairness_report(const Assignment& preds, const Assignment* truth, const GroupSpec& groups,
                               std::optional<double> threshold = 0.5);

/// `key=value` lines; undefined metrics print as `undefined`.
std::string format_report(const FairnessReport& report);

}  // namespace fairsl
