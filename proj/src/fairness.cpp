#include "fairsl/fairness.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "fairsl/error.hpp"

namespace fairsl {

namespace {

void add_atom(GroupSpec& spec, int target, GroupLabel label, int item) {
  if (label == GroupLabel::protected_group)
    spec.protected_atoms.push_back(target);
  else
    spec.unprotected_atoms.push_back(target);
  spec.item_of[static_cast<std::size_t>(target)] = item;
}

void require_nonempty(const GroupSpec& groups) {
  if (groups.protected_atoms.empty()) throw UndefinedMetric("protected group is empty");
  if (groups.unprotected_atoms.empty()) throw UndefinedMetric("unprotected group is empty");
}

double value_at(const Assignment& y, int index) {
  if (index < 0 || index >= y.size()) throw Error("group atom " + std::to_string(index) + " outside predictions");
  return y[index];
}

double mean(const Assignment& y, const std::vector<int>& atoms) {
  double s = 0.0;
  for (int i : atoms) s += value_at(y, i);
  return s / static_cast<double>(atoms.size());
}

double positive(double v, double threshold) { return v >= threshold ? 1.0 : 0.0; }

// Favorable rate of one group, binarized.
double favorable_rate(const Assignment& preds, const std::vector<int>& atoms, double threshold) {
  double s = 0.0;
  for (int i : atoms) s += positive(value_at(preds, i), threshold);
  return s / static_cast<double>(atoms.size());
}

struct Strata {
  std::optional<double> tpr, fpr;
};

Strata confusion_rates(const Assignment& preds, const Assignment& truth, const std::vector<int>& atoms,
                       double threshold) {
  double tp = 0, pos = 0, fp = 0, neg = 0;
  for (int i : atoms) {
    double t = value_at(truth, i);
    if (std::isnan(t)) continue;
    double yhat = positive(value_at(preds, i), threshold);
    if (positive(t, threshold) == 1.0) {
      pos += 1;
      tp += yhat;
    } else {
      neg += 1;
      fp += yhat;
    }
  }
  Strata s;
  if (pos > 0) s.tpr = tp / pos;
  if (neg > 0) s.fpr = fp / neg;
  return s;
}

std::pair<Strata, Strata> group_strata(const Assignment& preds, const Assignment& truth, const GroupSpec& groups,
                                       double threshold) {
  require_nonempty(groups);
  return {confusion_rates(preds, truth, groups.protected_atoms, threshold),
          confusion_rates(preds, truth, groups.unprotected_atoms, threshold)};
}

}  // namespace

GroupSpec group_spec(const Database& db, std::string_view predicate) {
  int p = predicate_index(db.schema(), predicate);
  if (p < 0) throw Error("unknown predicate " + std::string(predicate));
  GroupSpec spec;
  spec.item_of.assign(db.num_targets(), -1);
  for (std::size_t t = 0; t < db.num_targets(); ++t) {
    const auto& atom = db.target_atom(static_cast<int>(t));
    if (atom.predicate != p) continue;
    for (std::size_t k = 0; k < atom.args.size(); ++k) {
      GroupLabel label = db.group_of(atom.args[k]);
      if (label == GroupLabel::none) continue;
      int item = -1;
      for (std::size_t j = 0; j < atom.args.size() && item < 0; ++j)
        if (j != k) item = atom.args[j];
      add_atom(spec, static_cast<int>(t), label, item);
      break;
    }
  }
  return spec;
}

GroupSpec group_spec(const std::vector<std::string>& atoms, const std::map<std::string, GroupLabel>& groups,
                     std::string_view predicate) {
  GroupSpec spec;
  spec.item_of.assign(atoms.size(), -1);
  std::map<std::string, int> items;
  for (std::size_t t = 0; t < atoms.size(); ++t) {
    Literal lit = parse_literal(atoms[t]);
    if (!predicate.empty() && lit.predicate != predicate) continue;
    for (std::size_t k = 0; k < lit.args.size(); ++k) {
      auto it = groups.find(lit.args[k].name);
      if (it == groups.end() || it->second == GroupLabel::none) continue;
      int item = -1;
      for (std::size_t j = 0; j < lit.args.size() && item < 0; ++j)
        if (j != k) item = items.try_emplace(lit.args[j].name, static_cast<int>(items.size())).first->second;
      add_atom(spec, static_cast<int>(t), it->second, item);
      break;
    }
  }
  return spec;
}

GroupSpec swap_groups(const GroupSpec& groups) {
  return {groups.unprotected_atoms, groups.protected_atoms, groups.item_of};
}

Assignment binarize(const Assignment& preds, double threshold) {
  return preds.unaryExpr([threshold](double v) { return positive(v, threshold); });
}

GroupRates denial_rates(const Assignment& preds, const GroupSpec& groups, std::optional<double> threshold) {
  require_nonempty(groups);
  auto rate = [&](const std::vector<int>& atoms) {
    double s = 0.0;
    for (int i : atoms) {
      double v = value_at(preds, i);
      s += 1.0 - (threshold ? positive(v, *threshold) : v);
    }
    return s / static_cast<double>(atoms.size());
  };
  return {rate(groups.protected_atoms), rate(groups.unprotected_atoms)};
}

double risk_difference(const Assignment& preds, const GroupSpec& groups, std::optional<double> threshold) {
  auto r = denial_rates(preds, groups, threshold);
  return r.protected_rate - r.unprotected_rate;
}

double risk_ratio(const Assignment& preds, const GroupSpec& groups, std::optional<double> threshold) {
  auto r = denial_rates(preds, groups, threshold);
  if (r.unprotected_rate == 0.0) throw UndefinedMetric("risk ratio undefined: unprotected denial rate is 0");
  return r.protected_rate / r.unprotected_rate;
}

double relative_chance(const Assignment& preds, const GroupSpec& groups, std::optional<double> threshold) {
  auto r = denial_rates(preds, groups, threshold);
  if (r.unprotected_rate == 1.0) throw UndefinedMetric("relative chance undefined: unprotected denial rate is 1");
  return (1.0 - r.protected_rate) / (1.0 - r.unprotected_rate);
}

double statistical_parity_difference(const Assignment& preds, const GroupSpec& groups, double threshold) {
  require_nonempty(groups);
  return favorable_rate(preds, groups.protected_atoms, threshold) -
         favorable_rate(preds, groups.unprotected_atoms, threshold);
}

double disparate_impact(const Assignment& preds, const GroupSpec& groups, double threshold) {
  require_nonempty(groups);
  double privileged = favorable_rate(preds, groups.unprotected_atoms, threshold);
  if (privileged == 0.0) throw UndefinedMetric("disparate impact undefined: unprotected favorable rate is 0");
  return favorable_rate(preds, groups.protected_atoms, threshold) / privileged;
}

OddsGaps equalized_odds(const Assignment& preds, const Assignment& truth, const GroupSpec& groups,
                        double threshold) {
  auto [prot, unprot] = group_strata(preds, truth, groups, threshold);
  OddsGaps gaps;
  if (prot.tpr && unprot.tpr) gaps.pos = std::abs(*prot.tpr - *unprot.tpr);
  if (prot.fpr && unprot.fpr) gaps.neg = std::abs(*prot.fpr - *unprot.fpr);
  return gaps;
}

double equal_opportunity_difference(const Assignment& preds, const Assignment& truth, const GroupSpec& groups,
                                    double threshold) {
  auto [prot, unprot] = group_strata(preds, truth, groups, threshold);
  if (!prot.tpr || !unprot.tpr) throw UndefinedMetric("equal opportunity undefined: a group has no positives");
  return *prot.tpr - *unprot.tpr;
}

double average_odds_difference(const Assignment& preds, const Assignment& truth, const GroupSpec& groups,
                               double threshold) {
  auto [prot, unprot] = group_strata(preds, truth, groups, threshold);
  if (!prot.tpr || !unprot.tpr || !prot.fpr || !unprot.fpr)
    throw UndefinedMetric("average odds undefined: a group lacks positives or negatives");
  return 0.5 * ((*prot.fpr - *unprot.fpr) + (*prot.tpr - *unprot.tpr));
}

double non_parity(const Assignment& preds, const GroupSpec& groups) {
  require_nonempty(groups);
  return std::abs(mean(preds, groups.protected_atoms) - mean(preds, groups.unprotected_atoms));
}

Overestimation overestimation(const Assignment& preds, const Assignment& truth, const GroupSpec& groups) {
  require_nonempty(groups);
  struct Sums {
    double pred = 0, truth = 0;
    int n = 0;
  };
  std::map<int, std::pair<Sums, Sums>> per_item;
  auto collect = [&](const std::vector<int>& atoms, bool is_protected) {
    for (int i : atoms) {
      int item = i < static_cast<int>(groups.item_of.size()) ? groups.item_of[static_cast<std::size_t>(i)] : -1;
      if (item < 0) continue;
      double t = value_at(truth, i);
      if (std::isnan(t)) continue;
      auto& s = is_protected ? per_item[item].first : per_item[item].second;
      s.pred += value_at(preds, i);
      s.truth += t;
      ++s.n;
    }
  };
  collect(groups.protected_atoms, true);
  collect(groups.unprotected_atoms, false);
  Overestimation out;
  double total = 0.0;
  for (const auto& [item, sums] : per_item) {
    const auto& [p, u] = sums;
    if (p.n == 0 || u.n == 0) {
      ++out.skipped;
      continue;
    }
    double over_p = std::max(0.0, (p.pred - p.truth) / p.n);
    double over_u = std::max(0.0, (u.pred - u.truth) / u.n);
    total += std::abs(over_p - over_u);
    ++out.items;
  }
  if (out.items == 0) throw UndefinedMetric("overestimation undefined: no item rated by both groups");
  out.value = total / out.items;
  return out;
}

FairMetric parse_fair_metric(std::string_view name) {
  if (name == "rd") return FairMetric::rd;
  if (name == "rr") return FairMetric::rr;
  if (name == "rc") return FairMetric::rc;
  if (name == "non_parity" || name == "nonparity") return FairMetric::non_parity;
  if (name == "relational_all" || name == "relational-all" || name == "rd,rr,rc") return FairMetric::relational_all;
  throw Error("unknown fairness metric '" + std::string(name) + "'");
}

std::vector<LinearConstraint> build_delta_constraints(FairMetric metric, const GroupSpec& groups, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw Error("delta must lie in [0,1]");
  require_nonempty(groups);
  const double g1 = groups.g1(), g2 = groups.g2();
  // sum_prot(a * y) + sum_unprot(b * y) (sense) bound
  auto make = [&](double a, double b, Sense sense, double bound, std::string label) {
    SparseCoefficients coef;
    for (int i : groups.protected_atoms) coef.emplace_back(i, a);
    for (int i : groups.unprotected_atoms) coef.emplace_back(i, b);
    return LinearConstraint{canonicalize(std::move(coef)), sense, bound, std::move(label)};
  };
  std::vector<LinearConstraint> out;
  auto rd = [&](const std::string& name) {
    out.push_back(make(g2, -g1, Sense::greater_equal, -g1 * g2 * delta, name + "-upper"));
    out.push_back(make(g2, -g1, Sense::less_equal, g1 * g2 * delta, name + "-lower"));
  };
  auto rr = [&] {
    out.push_back(make(-g2, (1.0 + delta) * g1, Sense::less_equal, delta * g1 * g2, "RR-upper"));
    out.push_back(make(-g2, (1.0 - delta) * g1, Sense::greater_equal, -delta * g1 * g2, "RR-lower"));
  };
  auto rc = [&] {
    out.push_back(make(g2, -(1.0 + delta) * g1, Sense::less_equal, 0.0, "RC-upper"));
    out.push_back(make(g2, -(1.0 - delta) * g1, Sense::greater_equal, 0.0, "RC-lower"));
  };
  switch (metric) {
    case FairMetric::rd: rd("RD"); break;
    case FairMetric::rr: rr(); break;
    case FairMetric::rc: rc(); break;
    case FairMetric::non_parity: rd("NP"); break;
    case FairMetric::relational_all:
      rd("RD");
      rr();
      rc();
      break;
  }
  return out;
}

FairnessReport fairness_report(const Assignment& preds, const Assignment* truth, const GroupSpec& groups,
                               std::optional<double> threshold) {
  FairnessReport r;
  r.threshold = threshold;
  const double cut = threshold.value_or(0.5);
  auto attempt = [](std::optional<double>& field, auto&& compute) {
    try {
      field = compute();
    } catch (const UndefinedMetric&) {
      field.reset();
    }
  };
  attempt(r.rd, [&] { return risk_difference(preds, groups, threshold); });
  attempt(r.rr, [&] { return risk_ratio(preds, groups, threshold); });
  attempt(r.rc, [&] { return relative_chance(preds, groups, threshold); });
  attempt(r.spd, [&] { return statistical_parity_difference(preds, groups, cut); });
  attempt(r.di, [&] { return disparate_impact(preds, groups, cut); });
  attempt(r.non_parity, [&] { return non_parity(preds, groups); });
  bool has_truth = truth && truth->size() == preds.size() && !truth->hasNaN();
  if (has_truth) {
    try {
      auto eo = equalized_odds(preds, *truth, groups, cut);
      r.eo_pos = eo.pos;
      r.eo_neg = eo.neg;
    } catch (const UndefinedMetric&) {
    }
    attempt(r.eq_opportunity, [&] { return equal_opportunity_difference(preds, *truth, groups, cut); });
    attempt(r.avg_odds, [&] { return average_odds_difference(preds, *truth, groups, cut); });
    attempt(r.overestimation, [&] { return overestimation(preds, *truth, groups).value; });
  }
  return r;
}

std::string format_report(const FairnessReport& report) {
  std::ostringstream out;
  auto line = [&](const char* key, const std::optional<double>& v) {
    out << key << '=';
    if (v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", *v);
      out << buf;
    } else {
      out << "undefined";
    }
    out << '\n';
  };
  line("rd", report.rd);
  line("rr", report.rr);
  line("rc", report.rc);
  line("spd", report.spd);
  line("di", report.di);
  line("eo_pos", report.eo_pos);
  line("eo_neg", report.eo_neg);
  line("eq_opportunity", report.eq_opportunity);
  line("avg_odds", report.avg_odds);
  line("non_parity", report.non_parity);
  line("overestimation", report.overestimation);
  if (report.threshold)
    line("threshold", report.threshold);
  else
    out << "threshold=continuous\n";
  return out.str();
}

}  // namespace fairsl
